import contextlib
import json
import os
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings

from filterbank.bank import GAUSSIAN, FilterBank
from filterbank.sorting import sort_bank
from filterbank.storage import save_bank
from optengine.convolution import ResponseTrace
from optengine.objective import breakdown_from_traces
from optengine.training import FitResult
from spikecore.io import save_spike_matrix
from spikecore.matrix import SpikeMatrix, bernoulli_matrix

from .config import RunConfig, resolve
from .entry import run
from .models import RunRecord
from .plots import emit_plots
from .reports import RunReport, record_run

NO_LEDGER = {**settings.CONVSEQ, 'record_runs': False}


def write_config(directory, text, name='run.toml'):
    path = Path(directory) / name
    path.write_text(text)
    return str(path)


class ConfigResolutionTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = write_config(self.tmp.name, 'M = 50\nseed = 9\n\n[fit]\nM = 60\nK = 3\n')

    def tearDown(self):
        self.tmp.cleanup()

    def test_flag_then_table_then_top_level_then_settings(self):
        config = resolve('fit', {'config': self.path, 'K': 2}, ('M', 'K', 'lrate'))
        self.assertEqual((config['M'], config['K'], config['lrate']), (60, 2, 0.1))
        config = resolve('null', {'config': self.path}, ('M', 'K'))
        self.assertEqual((config['M'], config['K']), (50, 1))

    def test_seed_precedence(self):
        self.assertEqual(resolve('fit', {'config': self.path, 'seed': 4}).seed, 4)
        self.assertEqual(resolve('fit', {'config': self.path}).seed, 9)
        with mock.patch.dict(os.environ, {'CONVSEQ_SEED': '12'}):
            self.assertEqual(resolve('fit', {}).seed, 12)

    def test_json_files(self):
        path = write_config(self.tmp.name, json.dumps({'score': {'margin': 7}}), 'run.json')
        self.assertEqual(resolve('score', {'config': path}, ('margin',))['margin'], 7)

    def test_invalid_values(self):
        with self.assertRaises(ValidationError) as ctx:
            resolve('fit', {'M': 0, 'lrate': 0.0, 'variant': 'wavelet', 'seed': -1},
                    ('M', 'lrate', 'variant'))
        self.assertEqual(set(ctx.exception.error_dict), {'M', 'lrate', 'variant', 'seed'})

    def test_missing_inputs_and_required_keys(self):
        with self.assertRaises(ValidationError) as ctx:
            resolve('score', {'traces': '/nonexistent/traces.csv'}, ('traces', 'truth'),
                    input_keys=('traces', 'truth'), required=('traces', 'truth'))
        self.assertEqual(set(ctx.exception.error_dict), {'traces', 'truth'})

    def test_unreadable_config_file(self):
        path = write_config(self.tmp.name, '{"M": ', 'broken.json')
        with self.assertRaises(ValidationError):
            resolve('fit', {'config': path})
        with self.assertRaises(ValidationError):
            resolve('fit', {'config': str(Path(self.tmp.name) / 'absent.toml')})

    def test_cross_correlation_weight(self):
        self.assertEqual(RunConfig('fit', params={'K': 1, 'beta_xcor': 5.0}).beta_xcor, 0.0)
        self.assertEqual(RunConfig('fit', params={'K': 3, 'beta_xcor': 5.0}).beta_xcor, 5.0)
        self.assertEqual(RunConfig('fit', params={'K': 2}).beta_xcor, 10.0)


class RunReportTests(TestCase):

    def test_phases_add_up(self):
        report = RunReport('fit')
        for name in ('load', 'train', 'load'):
            with report.phase(name):
                sum(range(1000))
        wall_clock = report.to_dict()['wall_clock']
        self.assertEqual(set(wall_clock), {'load', 'train', 'total'})
        self.assertAlmostEqual(wall_clock['total'], wall_clock['load'] + wall_clock['train'])

    def test_phase_recorded_on_error(self):
        report = RunReport('fit')
        with self.assertRaises(RuntimeError), report.phase('train'):
            raise RuntimeError('boom')
        self.assertIn('train', report.phases)

    def test_report_lists_itself(self):
        report = RunReport('null', {'seed': 3})
        with tempfile.TemporaryDirectory() as tmp:
            path = report.write(Path(tmp) / 'null_report.json')
            data = json.loads(path.read_text())
        self.assertEqual(data['manifest'], [str(path)])

    def test_ledger(self):
        report = RunReport('score', {'seed': 5})
        report.add_file('a.json')
        record = record_run(report)
        self.assertEqual(RunRecord.objects.get(), record)
        self.assertEqual((record.seed, record.manifest_json), (5, ['a.json']))
        with override_settings(CONVSEQ=NO_LEDGER):
            self.assertIsNone(record_run(report))
        self.assertEqual(RunRecord.objects.count(), 1)


@override_settings(CONVSEQ=NO_LEDGER)
class EntryPointTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)
        save_spike_matrix(SpikeMatrix.from_pairs(2, 20, [(0, 3), (1, 8)]), self.out / 'x.coo')
        save_bank(FilterBank(GAUSSIAN, 2, 6, 1, [[4.0, 1.0]], sigma=1.0), self.out / 'bank.json')

    def tearDown(self):
        self.tmp.cleanup()

    def run_quietly(self, *args):
        with contextlib.redirect_stdout(StringIO()), contextlib.redirect_stderr(StringIO()) as err:
            code = run(['convseq.py', *args])
        return code, err.getvalue()

    def test_success(self):
        code, _ = self.run_quietly('sort', '--load', str(self.out / 'bank.json'),
                                   '--input', str(self.out / 'x.coo'), '-o', str(self.out))
        self.assertEqual(code, 0)
        self.assertTrue((self.out / 'sort_report.json').exists())

    def test_command_error(self):
        code, err = self.run_quietly('sort', '--load', str(self.out / 'missing.json'),
                                     '-o', str(self.out))
        self.assertEqual(code, 1)
        self.assertIn('does not exist', err)

    def test_unknown_subcommand(self):
        self.assertEqual(self.run_quietly('unfold')[0], 1)

    def test_bad_flag(self):
        self.assertEqual(self.run_quietly('sort', '--no-such-flag')[0], 2)


class PlotTests(SimpleTestCase):

    def setUp(self):
        values = np.stack([np.sin(np.linspace(0, 12, 300)) ** 2, np.linspace(0, 1, 300)])
        self.result = FitResult(
            bank=FilterBank(GAUSSIAN, 8, 10, 2, np.tile(np.arange(8.0), (2, 1)), sigma=2.0),
            traces=[ResponseTrace(row, k) for k, row in enumerate(values)],
            loss_history=[breakdown_from_traces(values * scale, 100.0, 10.0, 10)
                          for scale in (1.0, 1.5, 2.0)],
        )
        self.X = bernoulli_matrix(8, 300, 0.05, seed=1)

    def test_same_inputs_same_bytes(self):
        with tempfile.TemporaryDirectory() as tmp:
            written = []
            for name in ('a', 'b'):
                written.append(emit_plots(self.result, [[(60, 1.0)], []], Path(tmp) / name,
                                          X=self.X, calibration=0.8,
                                          sort_results=sort_bank(self.result.bank)))
            self.assertEqual([p.name for p in written[0]],
                             ['raster.svg', 'raster_sorted_k0.svg', 'raster_sorted_k1.svg',
                              'traces.svg', 'loss.svg'])
            for first, second in zip(*written):
                self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_missing_threshold_is_logged(self):
        with tempfile.TemporaryDirectory() as tmp, self.assertLogs('cli.plots', 'WARNING'):
            written = emit_plots(self.result, None, tmp)
        self.assertEqual([p.name for p in written], ['traces.svg', 'loss.svg'])


class BenchCommandTests(TestCase):

    def test_small_bench_grid(self):
        labels = ['bench-grid_N76_T4441_S0.0015', 'bench-grid_N76_T8882_S0.0015']
        with tempfile.TemporaryDirectory() as tmp:
            call_command('bench', preset='bench-grid', only=labels, n_steps=1, bench_workers=2,
                         out_dir=tmp, stdout=StringIO())
            report = json.loads((Path(tmp) / 'bench_report.json').read_text())
            lines = (Path(tmp) / 'bench.csv').read_text().splitlines()
        self.assertEqual([row['label'] for row in report['summary']['rows']], labels)
        self.assertEqual(len(lines), 3)
        self.assertIsInstance(report['summary']['loglog_slopes']['N=76 S=0.0015'], float)
        self.assertEqual(RunRecord.objects.get().subcommand, 'bench')


class CommandFailureTests(TestCase):

    def test_plain_value_error_is_recorded_as_a_failed_run(self):
        failure = ValueError('density must lie in [0, 1], got 1.5')
        with tempfile.TemporaryDirectory() as tmp, \
                mock.patch('synthgen.management.commands.generate.iter_preset', side_effect=failure):
            with self.assertRaisesMessage(CommandError, 'generate: density must lie in [0, 1]'):
                call_command('generate', preset='single-seq', out_dir=tmp, stdout=StringIO())
            self.assertFalse((Path(tmp) / 'generate_report.json').exists())
        record = RunRecord.objects.get()
        self.assertEqual((record.subcommand, record.status), ('generate', 'failed'))
        self.assertIn('density', record.report_json['summary']['error'])
