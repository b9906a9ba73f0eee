import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from cli.models import RunRecord
from optengine.io import save_traces
from spikecore.io import save_spike_matrix
from spikecore.matrix import Permutation, SpikeMatrix, bernoulli_matrix, permute_matrix
from synthgen.specs import GroundTruth, Occurrence
from synthgen.truth import save_ground_truth

from .exceptions import ScoringError
from .null import NullCalibration, calibrate_null, threshold
from .peaks import count_detections, extract_detections, local_maxima
from .roc import roc_auc
from .scoring import assign_filters, match_occurrences, score


def bumps(n_bins, centers, height=5.0, width=5.0):
    t = np.arange(n_bins)
    values = np.zeros(n_bins)
    for c in centers:
        values += height * np.exp(-((t - c) ** 2) / (2 * width ** 2))
    return values


def truth_of(*centers_per_type):
    occurrences = [Occurrence(tau, c) for tau, centers in enumerate(centers_per_type)
                   for c in centers]
    return GroundTruth(tuple(occurrences))


def brute_force_auc(values, centers, margin):
    negatives = [t for t in range(len(values)) if all(abs(t - c) > margin for c in centers)]
    points = []
    for theta in [np.inf, *sorted(set(values.tolist()), reverse=True), -np.inf]:
        found = sum(any(values[t] >= theta for t in range(max(c - margin, 0),
                                                           min(c + margin + 1, len(values))))
                    for c in centers)
        false_hits = sum(values[t] >= theta for t in negatives)
        points.append((false_hits / max(len(negatives), 1), found / len(centers)))
    return sum((f1 - f0) * (t1 + t0) / 2 for (f0, t0), (f1, t1) in zip(points, points[1:]))


class PeakTests(SimpleTestCase):

    def test_nothing_above_threshold(self):
        self.assertEqual(extract_detections(np.full(20, 0.5), 1.0, 3), [])
        self.assertEqual(extract_detections(np.array([]), 0.0, 3), [])

    def test_flat_trace_has_no_peaks(self):
        self.assertEqual(extract_detections(np.zeros(500), 0.0, 50), [])
        self.assertEqual(count_detections([np.full(300, 0.2)], 0.1, 10), 0)
        detections = extract_detections(np.concatenate([np.zeros(50), bumps(100, [50])]), 0.0, 200)
        self.assertEqual(detections, [(100, 5.0)])

    def test_single_bump(self):
        self.assertEqual(extract_detections(bumps(1000, [500]), 1.0, 100), [(500, 5.0)])

    def test_suppression_keeps_the_higher_peak(self):
        values = bumps(1000, [500]) + bumps(1000, [540], height=4.0)
        detections = extract_detections(values, 1.0, 100)
        self.assertEqual([t for t, _ in detections], [500])
        self.assertEqual([t for t, _ in extract_detections(values, 1.0, 30)], [500, 540])

    def test_detections_are_sorted_and_spaced(self):
        values = np.random.default_rng(0).random(2000)
        for window in (1, 7, 50):
            bins = [t for t, _ in extract_detections(values, 0.3, window)]
            self.assertEqual(bins, sorted(bins))
            self.assertTrue((np.diff(bins) >= window).all())
            self.assertTrue(all(values[t] >= 0.3 for t in bins))

    def test_local_maxima_include_edges(self):
        self.assertEqual(local_maxima([3.0, 1.0, 2.0]).tolist(), [0, 2])

    def test_count_over_filters(self):
        traces = [bumps(600, [100, 400]), bumps(600, [250])]
        self.assertEqual(count_detections(traces, 1.0, 50), 3)

    def test_invalid_window(self):
        with self.assertRaises(ScoringError):
            extract_detections(np.ones(5), 0.0, 0)


class NullTests(SimpleTestCase):

    def test_threshold(self):
        self.assertEqual(threshold(0.5, 0.25), 1.5)
        self.assertEqual(threshold(0.5, 0.25, z=2.0), 1.0)

    def test_mean_is_spike_rate_for_stochastic_rows(self):
        width = 10
        dense = np.random.default_rng(1).random((15, 400)) < 0.05
        dense[:, :width] = False
        dense[:, -width:] = False
        X = SpikeMatrix.from_dense(dense)
        for family in ('direct', 'gaussian', 'stochastic'):
            calibration = calibrate_null(X, width, family, n_null=20, seed=2, sigma=3.0)
            self.assertAlmostEqual(calibration.mu0, X.n_spikes / X.n_bins, places=9)
            self.assertAlmostEqual(calibration.alpha, 4.0 * calibration.sigma0 + calibration.mu0)
            self.assertEqual(calibration.family, family)

    def test_blind_to_column_order(self):
        X = bernoulli_matrix(30, 20_000, 0.02, seed=3)
        cols = Permutation(np.random.default_rng(4).permutation(X.n_bins))
        shuffled = permute_matrix(X, Permutation(np.arange(X.n_neurons)), cols)
        first = calibrate_null(X, 20, n_null=50, seed=5)
        second = calibrate_null(shuffled, 20, n_null=50, seed=5)
        self.assertLess(abs(first.alpha - second.alpha), 0.5 * first.sigma0)

    def test_workers_do_not_change_the_result(self):
        X = bernoulli_matrix(12, 500, 0.05, seed=6)
        serial = calibrate_null(X, 8, n_null=130, seed=7)
        threaded = calibrate_null(X, 8, n_null=130, seed=7, workers=3)
        self.assertEqual(serial, threaded)
        self.assertNotEqual(serial, calibrate_null(X, 8, n_null=130, seed=8))

    def test_invalid_arguments(self):
        X = bernoulli_matrix(4, 50, 0.1, seed=0)
        with self.assertRaises(ScoringError):
            calibrate_null(X, 5, n_null=1)
        with self.assertRaises(ScoringError):
            calibrate_null(X, 5, family='laplace')

    def test_calibration_file(self):
        calibration = NullCalibration(0.1, 0.02, 0.18, n_null=10, z=4.0, seed=3)
        with tempfile.TemporaryDirectory() as tmp:
            path = calibration.save(Path(tmp) / 'calibration.json')
            self.assertEqual(NullCalibration.load(path), calibration)
            path.write_text('[1, 2]')
            with self.assertRaises(ScoringError):
                NullCalibration.load(path)
            path.write_text(json.dumps({'mu0': 0.1}))
            with self.assertRaises(ScoringError):
                NullCalibration.load(path)


class ScoringTests(SimpleTestCase):

    def test_margin_rule(self):
        truth = truth_of([1000])
        hit = score([[(1080, 3.0)]], truth, 100)
        self.assertEqual((hit.tp_rate, hit.fp_rate, hit.fn_rate), (1.0, 0.0, 0.0))
        miss = score([[(1150, 3.0)]], truth, 100)
        self.assertEqual((miss.tp_rate, miss.fp_rate, miss.fn_rate), (0.0, 1.0, 1.0))

    def test_no_detections(self):
        report = score([[]], truth_of([200, 600]), 50)
        self.assertEqual((report.tp_rate, report.fp_rate, report.fn_rate), (0.0, 0.0, 1.0))

    def test_nothing_to_find(self):
        report = score([[(100, 2.0)]], GroundTruth(()), 50)
        self.assertEqual((report.tp_rate, report.fp_rate), (1.0, 1.0))

    def test_one_detection_per_occurrence(self):
        report = score([[(990, 2.0), (1010, 2.5)]], truth_of([1000]), 50)
        self.assertEqual(report.matches, [(0, 0, 990, 1000)])
        self.assertEqual((report.tp_rate, report.fp_rate), (1.0, 0.5))

    def test_closest_pairs_match_first(self):
        self.assertEqual(match_occurrences([105, 140], [100, 150], 50), [(105, 100), (140, 150)])

    def test_rates_are_complementary(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            truth = truth_of(sorted(rng.choice(5000, 8, replace=False).tolist()))
            dets = [[(int(t), 1.0) for t in sorted(rng.choice(5000, 10, replace=False))]]
            report = score(dets, truth, 100)
            self.assertAlmostEqual(report.tp_rate + report.fn_rate, 1.0)
            self.assertTrue(0.0 <= report.fp_rate <= 1.0)

    def test_relabeling_types_and_filters(self):
        truth = truth_of([200, 800], [500])
        swapped = truth_of([500], [200, 800])
        detections = [[(210, 1.0), (790, 1.0)], [(470, 1.0), (1200, 1.0)]]
        first = score(detections, truth, 50)
        second = score(detections[::-1], swapped, 50)
        self.assertEqual((first.tp_rate, first.fp_rate), (second.tp_rate, second.fp_rate))
        self.assertEqual((first.tp_rate, first.fp_rate), (1.0, 0.25))

    def test_auto_assignment(self):
        truth = truth_of([200, 800], [500])
        detections = [[(505, 1.0)], [(195, 1.0), (805, 1.0)], [(1500, 1.0)]]
        assignment = assign_filters(detections, truth, 50)
        self.assertEqual(assignment, [1, 0, None])
        report = score(detections, truth, 50, assignment)
        self.assertEqual(report.tp_rate, 1.0)
        self.assertEqual(report.per_filter[2].false_positives, 1)

    def test_invalid_input(self):
        truth = truth_of([100])
        with self.assertRaises(ScoringError):
            score([[]], truth, -1)
        with self.assertRaises(ScoringError):
            score([[], []], truth_of([100], [300]), 10, assignment=[0, 0])
        with self.assertRaises(ScoringError):
            score([[]], truth, 10, assignment=[0, 1])


class RocTests(SimpleTestCase):

    def test_indicator_trace_is_perfect(self):
        values = np.zeros(1000)
        values[[200, 600]] = 1.0
        self.assertEqual(roc_auc(values, truth_of([200, 600]), 20).auc, 1.0)

    def test_constant_trace_is_chance(self):
        curve = roc_auc(np.full(500, 2.0), truth_of([100, 300]), 10)
        self.assertAlmostEqual(curve.auc, 0.5)
        self.assertEqual(curve.points()[0], (0.0, 0.0))
        self.assertEqual(curve.points()[-1], (1.0, 1.0))

    def test_matches_a_threshold_sweep(self):
        rng = np.random.default_rng(10)
        for _ in range(25):
            n_bins = int(rng.integers(30, 80))
            centers = sorted(rng.choice(n_bins, int(rng.integers(1, 4)), replace=False).tolist())
            values = rng.integers(0, 6, n_bins).astype(np.float64)
            margin = int(rng.integers(0, 4))
            curve = roc_auc(values, truth_of(centers), margin)
            self.assertTrue(0.0 <= curve.auc <= 1.0)
            self.assertAlmostEqual(curve.auc, brute_force_auc(values, centers, margin))

    def test_curve_is_monotone(self):
        rng = np.random.default_rng(11)
        curve = roc_auc(rng.random(300), truth_of([50, 150, 250]), 5)
        self.assertTrue((np.diff(curve.fpr) >= 0).all())
        self.assertTrue((np.diff(curve.tpr) >= 0).all())
        self.assertTrue((np.diff(curve.thresholds) <= 0).all())

    def test_type_filter_and_empty_truth(self):
        truth = truth_of([100], [300])
        values = bumps(400, [300])
        self.assertEqual(roc_auc(values, truth, 20, type_index=1).auc, 1.0)
        self.assertLess(roc_auc(values, truth, 20, type_index=0).auc, 1.0)
        with self.assertRaises(ScoringError):
            roc_auc(values, GroundTruth(()), 20)

    def test_csv(self):
        curve = roc_auc(np.full(50, 1.0), truth_of([10]), 2)
        with tempfile.TemporaryDirectory() as tmp:
            lines = curve.write_csv(Path(tmp) / 'roc.csv').read_text().splitlines()
        self.assertEqual(lines[0], 'threshold,fpr,tpr')
        self.assertEqual(len(lines), 1 + len(curve.fpr))


class StatCommandTests(TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)
        save_traces([bumps(2000, [500, 1500]), bumps(2000, [1000])], self.out / 'traces.csv')
        save_ground_truth(truth_of([500, 1500], [1000]), self.out / 'x.truth')

    def tearDown(self):
        self.tmp.cleanup()

    def call(self, name, **options):
        call_command(name, out_dir=str(self.out), stdout=StringIO(), **options)
        return json.loads((self.out / f'{name}_report.json').read_text())

    def test_null_writes_calibration(self):
        save_spike_matrix(bernoulli_matrix(10, 300, 0.05, seed=1), self.out / 'x.coo')
        report = self.call('null', input=str(self.out / 'x.coo'), M=10, n_null=20, seed=4)
        calibration = NullCalibration.load(self.out / 'calibration.json')
        self.assertEqual(calibration.n_null, 20)
        self.assertEqual(calibration.seed, 4)
        self.assertEqual(report['summary']['calibration']['alpha'], calibration.alpha)

    def test_score_with_calibration(self):
        NullCalibration(0.2, 0.2, 1.0).save(self.out / 'calibration.json')
        report = self.call('score', traces=str(self.out / 'traces.csv'),
                           truth=str(self.out / 'x.truth'),
                           calibration=str(self.out / 'calibration.json'), M=200)
        self.assertEqual(report['summary']['tp_rate'], 1.0)
        self.assertEqual(report['summary']['fp_rate'], 0.0)
        detections = json.loads((self.out / 'detections.json').read_text())
        self.assertEqual([[t for t, _ in dets] for dets in detections['detections']],
                         [[500, 1500], [1000]])
        self.assertEqual(detections['margin'], 100)

    def test_score_needs_a_threshold(self):
        with self.assertRaises(CommandError):
            call_command('score', traces=str(self.out / 'traces.csv'),
                         truth=str(self.out / 'x.truth'), out_dir=str(self.out),
                         stdout=StringIO())
        self.assertEqual(RunRecord.objects.get().status, 'failed')

    def test_roc_per_filter(self):
        report = self.call('roc', traces=str(self.out / 'traces.csv'),
                           truth=str(self.out / 'x.truth'), M=200)
        self.assertEqual([row['type'] for row in report['summary']['auc']], [0, 1])
        for row in report['summary']['auc']:
            self.assertAlmostEqual(row['auc'], 1.0)
        for k in (0, 1):
            self.assertTrue((self.out / f'roc_k{k}.csv').exists())
