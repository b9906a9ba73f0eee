"""
Score significant peaks of fitted traces against ground truth.

Usage: python convseq.py score --traces fit/traces.csv --truth data/X.truth --calibration fit/calibration.json --m 200 -o fit/
"""

import json

from cli.base import ConvseqCommand
from optengine.io import load_traces
from stathypo.exceptions import ScoringError
from stathypo.null import NullCalibration
from stathypo.peaks import extract_detections
from stathypo.scoring import assign_filters, score
from synthgen.truth import load_ground_truth


def resolve_alpha(config):
    if config.get('alpha') is not None:
        return float(config['alpha'])
    if config.get('calibration'):
        return NullCalibration.load(config['calibration']).alpha
    raise ScoringError('either --alpha or --calibration is needed to decide significance')


class Command(ConvseqCommand):
    help = 'Score detections against a ground-truth sidecar'

    config_keys = ('traces', 'truth', 'calibration', 'alpha', 'M', 'margin', 'window',
                   'auto_assign')
    input_keys = ('traces', 'truth', 'calibration')
    required_keys = ('traces', 'truth')

    def add_command_arguments(self, parser):
        parser.add_argument('--traces', help='Trace CSV written by "fit"')
        parser.add_argument('--truth', help='Ground-truth sidecar written by "generate"')
        parser.add_argument('--calibration', help='Calibration record written by "null"')
        parser.add_argument('--alpha', type=float, help='Explicit significance threshold')
        parser.add_argument('--m', dest='M', type=int, help='Filter width in bins (default: 100)')
        parser.add_argument('--margin', type=int, help='Matching margin in bins (default: M//2)')
        parser.add_argument('--window', type=int, help='Peak suppression window (default: M)')
        parser.add_argument('--auto-assign', dest='auto_assign', action='store_const', const=True,
                            help='Pair filters with sequence types by best match instead of by index')

    def run(self, config, report):
        width = config.get('M', 100)
        margin = config.get('margin', width // 2)
        window = config.get('window', width)
        alpha = resolve_alpha(config)
        with report.phase('load'):
            traces = load_traces(config['traces'])
            truth = load_ground_truth(config['truth'])
        with report.phase('score'):
            detections = [extract_detections(trace, alpha, window) for trace in traces]
            assignment = assign_filters(detections, truth, margin) if config.get('auto_assign') else None
            result = score(detections, truth, margin, assignment)
        result.notes.update({'alpha': alpha, 'window': window})
        path = config.output('detections.json')
        with report.phase('write'):
            path.write_text(json.dumps(result.to_dict(), indent=2), encoding='utf-8')
        report.add_file(path)
        report.summary.update({
            'alpha': alpha,
            'tp_rate': result.tp_rate,
            'fp_rate': result.fp_rate,
            'fn_rate': result.fn_rate,
            'assignment': result.assignment,
            'n_detections': result.n_detections,
        })
        self.stdout.write(self.style.SUCCESS(
            f'TP {result.tp_rate:.3f}  FP {result.fp_rate:.3f}  FN {result.fn_rate:.3f} '
            f'({result.n_detections} detections, {result.n_occurrences} occurrences)'))
