"""
Calibrate the significance threshold on a spike file.

Usage: python convseq.py null --input data/X.coo --m 200 --n-null 1000 -o fit/
"""

from cli.base import ConvseqCommand
from filterbank.bank import DEFAULT_INIT_SCALE
from spikecore.io import load_spike_matrix
from stathypo.null import calibrate_null


class Command(ConvseqCommand):
    help = 'Calibrate the significance threshold from random null filters'

    config_keys = ('input', 'format', 'M', 'n_null', 'z', 'null_family', 'variant', 'sigma',
                   'normalized_gaussian', 'init_scale', 'workers')
    input_keys = ('input',)
    required_keys = ('input',)

    def add_command_arguments(self, parser):
        parser.add_argument('--input', help='Spike file (coo-text or dense-csv)')
        parser.add_argument('--format', choices=('coo-text', 'dense-csv'))
        parser.add_argument('--m', dest='M', type=int, help='Filter width in bins (default: 100)')
        parser.add_argument('--n-null', dest='n_null', type=int,
                            help='Number of random filters (default: 1000)')
        parser.add_argument('--z', type=float, help='Threshold in null standard deviations (default: 4)')
        parser.add_argument('--family', dest='null_family',
                            choices=('direct', 'gaussian', 'stochastic'),
                            help='Null filter family (default: the training variant)')
        parser.add_argument('--variant', choices=('direct', 'gaussian'),
                            help='Training variant the null mirrors (default: direct)')
        parser.add_argument('--sigma', type=float, help='Gaussian row width (default: 16)')
        parser.add_argument('--unnormalized-gaussian', dest='normalized_gaussian',
                            action='store_const', const=False)
        parser.add_argument('--workers', type=int, help='Worker threads (default: 1)')

    def run(self, config, report):
        with report.phase('load'):
            X = load_spike_matrix(config['input'], config.get('format'))
        family = config.get('null_family') or config.get('variant', 'direct')
        with report.phase('calibrate'):
            calibration = calibrate_null(
                X, config.get('M', 100), family,
                n_null=config.get('n_null', 1000),
                z=config.get('z', 4.0),
                seed=config.seed,
                sigma=config.get('sigma', 16.0),
                normalized=config.get('normalized_gaussian', True),
                init_scale=config.get('init_scale', DEFAULT_INIT_SCALE),
                workers=config.get('workers', 1),
            )
        report.add_file(calibration.save(config.output('calibration.json')))
        report.summary['calibration'] = calibration.to_dict()
        self.stdout.write(self.style.SUCCESS(
            f'alpha={calibration.alpha:.6f} (mu0={calibration.mu0:.6f}, '
            f'sigma0={calibration.sigma0:.6f}, {calibration.n_null} {family} filters)'))
