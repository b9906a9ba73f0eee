"""
Reorder neurons by the latencies a learned filter bank assigns them.

For every filter k writes ``order_k<k>.csv`` (row, neuron, latency) and the
reordered raster ``sorted_k<k>.coo``.

Usage: python convseq.py sort --load fit/bank.json --input data/X.coo -o fit/
"""

import csv

from cli.base import ConvseqCommand
from cli.plots import plot_raster
from filterbank.sorting import sort_bank
from filterbank.storage import load_bank
from spikecore.exceptions import DimensionError
from spikecore.io import load_spike_matrix, save_spike_matrix
from spikecore.matrix import reorder_rows


def write_order(result, path):
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(['row', 'neuron', 'latency'])
        for row, neuron in enumerate(result.order.tolist()):
            writer.writerow([row, neuron, float(result.latencies[neuron])])
    return path


class Command(ConvseqCommand):
    help = 'Sort neurons by learned filter latencies and write reordered rasters'

    config_keys = ('load', 'input', 'format', 'plots')
    input_keys = ('load', 'input')
    required_keys = ('load', 'input')

    def add_command_arguments(self, parser):
        parser.add_argument('--load', help='Filter bank JSON written by "fit"')
        parser.add_argument('--input', help='Spike file to reorder')
        parser.add_argument('--format', choices=('coo-text', 'dense-csv'))
        parser.add_argument('--plots', action='store_const', const=True,
                            help='Also draw every reordered raster as SVG')

    def run(self, config, report):
        with report.phase('load'):
            bank = load_bank(config['load'])
            X = load_spike_matrix(config['input'], config.get('format'))
        if bank.n_neurons != X.n_neurons:
            raise DimensionError(f'bank has N={bank.n_neurons}, data has N={X.n_neurons}')

        orders = []
        with report.phase('sort'):
            for result in sort_bank(bank):
                k = result.filter_index
                sorted_X = reorder_rows(X, result.order)
                report.add_file(write_order(result, config.output(f'order_k{k}.csv')))
                report.add_file(save_spike_matrix(sorted_X, config.output(f'sorted_k{k}.coo')))
                if config.get('plots'):
                    report.add_file(plot_raster(sorted_X, config.output(f'sorted_k{k}.svg'),
                                                f'raster sorted by filter {k}'))
                orders.append({'filter': k, 'order': result.order.tolist()})
        report.summary['orders'] = orders
        self.stdout.write(self.style.SUCCESS(f'Sorted {X.n_neurons} neurons for {bank.n_filters} filter(s)'))
