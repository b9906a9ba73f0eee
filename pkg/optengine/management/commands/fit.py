"""
Learn a filter bank on a spike file.

Writes the bank (JSON), the response traces (CSV) and, with ``--plots``,
SVG figures. With a calibration record (``--calibration``) or early stopping,
significant peaks are extracted and summarized in the report.

Usage: python convseq.py fit --input data/single-seq_isi400_jitter10.coo --k 1 --m 200 -o fit/
"""

from cli.base import ConvseqCommand
from cli.plots import emit_plots
from filterbank.bank import DEFAULT_INIT_SCALE, init_bank
from filterbank.sorting import sort_bank
from filterbank.storage import save_bank
from optengine.io import save_traces
from optengine.training import FitConfig, fit
from spikecore.io import load_spike_matrix
from stathypo.null import NullCalibration
from stathypo.peaks import extract_detections


class Command(ConvseqCommand):
    help = 'Fit convolutional sequence filters to a spike raster'

    config_keys = ('input', 'format', 'K', 'M', 'variant', 'sigma', 'normalized_gaussian',
                   'init_scale', 'beta_tv', 'beta_xcor', 'j', 'lrate', 'n_steps', 'early_stop',
                   'n_null', 'z', 'log_every', 'save', 'trace_out', 'plots', 'calibration')
    input_keys = ('input', 'calibration')
    required_keys = ('input',)

    def add_command_arguments(self, parser):
        parser.add_argument('--input', help='Spike file (coo-text or dense-csv)')
        parser.add_argument('--format', choices=('coo-text', 'dense-csv'),
                            help='Spike file format (default: from the file suffix)')
        parser.add_argument('--k', dest='K', type=int, help='Number of filters (default: 1)')
        parser.add_argument('--m', dest='M', type=int, help='Filter width in bins (default: 100)')
        parser.add_argument('--variant', choices=('direct', 'gaussian'),
                            help='Filter parameterization (default: direct)')
        parser.add_argument('--sigma', type=float, help='Gaussian row width (default: 16)')
        parser.add_argument('--unnormalized-gaussian', dest='normalized_gaussian',
                            action='store_const', const=False,
                            help='Use amplitude-1 Gaussian rows instead of unit-sum rows')
        parser.add_argument('--beta-tv', dest='beta_tv', type=float,
                            help='Total-variation weight (default: 100)')
        parser.add_argument('--beta-xcor', dest='beta_xcor', type=float,
                            help='Cross-correlation weight (default: 10, 0 when K=1)')
        parser.add_argument('--j', type=int, help='Lag bound of the cross-correlation (default: M)')
        parser.add_argument('--lrate', type=float, help='Adam learning rate (default: 0.1)')
        parser.add_argument('--steps', dest='n_steps', type=int,
                            help='Number of training steps (default: 100)')
        parser.add_argument('--early-stop', dest='early_stop', type=int,
                            help='Stop once this many significant peaks are found')
        parser.add_argument('--save', help='Where to write the learned bank (default: <out>/bank.json)')
        parser.add_argument('--trace-out', dest='trace_out',
                            help='Where to write the traces (default: <out>/traces.csv)')
        parser.add_argument('--plots', action='store_const', const=True,
                            help='Write SVG figures next to the other outputs')
        parser.add_argument('--calibration', help='Calibration record written by "null"')

    def run(self, config, report):
        with report.phase('load'):
            X = load_spike_matrix(config['input'], config.get('format'))
        self.stdout.write(f'Loaded {X.n_neurons} neurons x {X.n_bins} bins, {X.n_spikes} spikes')

        fit_config = FitConfig(
            n_steps=config.get('n_steps', 100),
            lrate=config.get('lrate', 0.1),
            beta_tv=config.get('beta_tv', 100.0),
            beta_xcor=config.beta_xcor,
            j=config.get('j'),
            early_stop=config.get('early_stop'),
            seed=config.seed,
            log_every=config.get('log_every', 10),
            n_null=config.get('n_null', 1000),
            z=config.get('z', 4.0),
        )
        calibration = None
        if config.get('calibration'):
            calibration = NullCalibration.load(config['calibration'])

        bank = init_bank(config.get('variant', 'direct'), X.n_neurons, config.get('M', 100),
                         config.n_filters, config.seed, sigma=config.get('sigma', 16.0),
                         normalized=config.get('normalized_gaussian', True),
                         scale=config.get('init_scale', DEFAULT_INIT_SCALE))
        with report.phase('fit'):
            result = fit(X, bank, fit_config, alpha=calibration.alpha if calibration else None)

        with report.phase('write'):
            bank_path = save_bank(result.bank, config.get('save') or config.output('bank.json'))
            trace_path = save_traces(result.traces, config.get('trace_out') or
                                     config.output('traces.csv'))
            report.add_file(bank_path)
            report.add_file(trace_path)

        summary = {
            'steps_run': result.steps_run,
            'stopped_early': result.stopped_early,
            'final_loss': result.final_loss.to_dict() if result.final_loss else None,
            'loss_history': [entry.total for entry in result.loss_history],
            'variance_history': [list(entry.per_filter_variance) for entry in result.loss_history],
            'alpha': result.alpha,
        }
        detections = None
        if result.alpha is not None:
            with report.phase('detect'):
                detections = [extract_detections(trace, result.alpha, result.bank.width)
                              for trace in result.traces]
            summary['detections'] = [[[t, v] for t, v in dets] for dets in detections]
            summary['n_detections'] = [len(dets) for dets in detections]
        report.summary.update(summary)

        if config.get('plots'):
            with report.phase('plots'):
                for path in emit_plots(result, detections, config.out_dir, X=X,
                                       calibration=result.alpha,
                                       sort_results=sort_bank(result.bank)):
                    report.add_file(path)

        final = result.final_loss.total if result.final_loss else float('nan')
        self.stdout.write(self.style.SUCCESS(
            f'Fit {result.bank!r} in {result.steps_run} steps, final loss {final:.6f}'))
        if result.stopped_early:
            self.stdout.write(self.style.WARNING('Stopped early: significant peak count reached'))
