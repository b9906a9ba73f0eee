"""
ROC curves of fitted traces against ground truth.

Usage: python convseq.py roc --traces fit/traces.csv --truth data/X.truth --m 200 -o fit/
"""

from cli.base import ConvseqCommand
from optengine.io import load_traces
from stathypo.roc import roc_auc
from synthgen.truth import load_ground_truth


class Command(ConvseqCommand):
    help = 'Compute ROC curves and AUC of response traces'

    config_keys = ('traces', 'truth', 'M', 'margin', 'type_index')
    input_keys = ('traces', 'truth')
    required_keys = ('traces', 'truth')

    def add_command_arguments(self, parser):
        parser.add_argument('--traces', help='Trace CSV written by "fit"')
        parser.add_argument('--truth', help='Ground-truth sidecar written by "generate"')
        parser.add_argument('--m', dest='M', type=int, help='Filter width in bins (default: 100)')
        parser.add_argument('--margin', type=int, help='Matching margin in bins (default: M//2)')
        parser.add_argument('--type', dest='type_index', type=int,
                            help='Score every filter against this sequence type only')

    def run(self, config, report):
        margin = config.get('margin', config.get('M', 100) // 2)
        with report.phase('load'):
            traces = load_traces(config['traces'])
            truth = load_ground_truth(config['truth'])
        aucs = []
        with report.phase('roc'):
            for trace in traces:
                k = trace.filter_index
                type_index = config.get('type_index')
                if type_index is None and truth.n_types > 1 and k < truth.n_types:
                    type_index = k
                curve = roc_auc(trace, truth, margin, type_index)
                report.add_file(curve.write_csv(config.output(f'roc_k{k}.csv')))
                aucs.append({'filter': k, 'type': type_index, 'auc': curve.auc})
                self.stdout.write(f'  filter {k}: AUC {curve.auc:.4f}')
        report.summary['auc'] = aucs
        self.stdout.write(self.style.SUCCESS(f'ROC written for {len(aucs)} filter(s)'))
