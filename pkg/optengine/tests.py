import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.test import SimpleTestCase, TestCase
from scipy.stats import spearmanr

from filterbank.bank import DIRECT, GAUSSIAN, FilterBank, init_direct, init_gaussian, kernels
from filterbank.sorting import filter_latencies
from filterbank.storage import load_bank
from spikecore.exceptions import DimensionError, ParameterError
from spikecore.io import save_spike_matrix
from spikecore.matrix import SpikeMatrix, bernoulli_matrix
from synthgen.embed import embed_sequences
from synthgen.specs import FORWARD, REVERSE, SequenceSpec

from .adam import AdamState, adam_step
from .convolution import convolve, convolve_bank, convolve_transpose
from .io import load_traces, save_traces
from .objective import (breakdown_from_traces, evaluate, gradient, loss, pair_correlation, shift,
                        tv_term, variance_term, xcorr_term)
from .training import FitConfig, FitConfigError, fit


def brute_force_trace(kernel, dense):
    n_neurons, width = kernel.shape
    n_bins = dense.shape[1]
    out = np.zeros(n_bins)
    for t in range(n_bins):
        for n in range(n_neurons):
            for m in range(width):
                s = t + m - width // 2
                if 0 <= s < n_bins:
                    out[t] += kernel[n, m] * dense[n, s]
    return out


def random_matrix(rng, n_neurons, n_bins, density):
    return SpikeMatrix.from_dense(rng.random((n_neurons, n_bins)) < density)


def sequence_data(n_neurons=20, n_bins=1200, seed=0):
    """A noiseless sequence over sparse background, every 200 bins."""
    spec = SequenceSpec(tuple(range(0, n_neurons, 2)), 30, 200)
    background = bernoulli_matrix(n_neurons, n_bins, 0.005, seed=seed)
    return embed_sequences(background, [spec], seed=seed)[0]


def forward_and_reverse(n_neurons=30, n_bins=2400, seed=0):
    """The same 20 neurons replayed forward and in reverse, alternating every 200 bins."""
    members = tuple(range(20))
    specs = [SequenceSpec(members, 30, 400, direction_schedule=(direction,), offset=100 + 200 * i)
             for i, direction in enumerate((FORWARD, REVERSE))]
    background = bernoulli_matrix(n_neurons, n_bins, 0.002, seed=seed)
    return embed_sequences(background, specs, seed=seed)


class ConvolutionTests(SimpleTestCase):

    def test_small_example(self):
        X = SpikeMatrix.from_pairs(2, 4, [(0, 0), (1, 1)])
        trace = convolve(np.full((2, 2), 0.5), X)
        np.testing.assert_allclose(trace.values, [0.5, 1.0, 0.5, 0.0])
        self.assertEqual(len(trace), 4)
        self.assertAlmostEqual(trace.values.sum(), X.n_spikes)

    def test_matches_triple_loop(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n_neurons, width, n_bins = rng.integers(1, 17), rng.integers(1, 9), rng.integers(1, 129)
            X = random_matrix(rng, n_neurons, n_bins, rng.uniform(0.0, 0.5))
            kernel = rng.random((n_neurons, width))
            np.testing.assert_allclose(convolve(kernel, X).values,
                                       brute_force_trace(kernel, X.dense()), rtol=0, atol=1e-12)

    def test_empty_raster(self):
        X = SpikeMatrix(3, 50, [], [])
        np.testing.assert_array_equal(convolve(np.ones((3, 5)), X).values, np.zeros(50))

    def test_conservation_with_empty_margins(self):
        rng = np.random.default_rng(1)
        width, n_bins = 9, 300
        dense = rng.random((12, n_bins)) < 0.1
        dense[:, :width] = False
        dense[:, n_bins - width:] = False
        X = SpikeMatrix.from_dense(dense)
        for bank in (init_direct(12, width, 2, seed=2), init_gaussian(12, width, 2, 3.0, seed=2)):
            traces = convolve_bank(kernels(bank), X)
            np.testing.assert_allclose(traces.sum(axis=1), X.n_spikes, rtol=1e-9)
            self.assertTrue((traces >= 0).all())

    def test_shift_covariance(self):
        rng = np.random.default_rng(2)
        width, delta = 6, 7
        dense = np.zeros((5, 100), dtype=bool)
        dense[:, 20:60] = rng.random((5, 40)) < 0.3
        X = SpikeMatrix.from_dense(dense)
        shifted = SpikeMatrix(5, 100, X.neurons, X.bins + delta)
        kernel = kernels(init_direct(5, width, 1, seed=3))[0]
        original, moved = convolve(kernel, X).values, convolve(kernel, shifted).values
        np.testing.assert_array_equal(moved[delta:], original[:-delta])

    def test_transpose_is_the_adjoint(self):
        rng = np.random.default_rng(3)
        X = random_matrix(rng, 7, 60, 0.2)
        stacked = rng.random((2, 7, 5))
        grads = rng.normal(size=(2, 60))
        lhs = np.sum(grads * convolve_bank(stacked, X))
        rhs = np.sum(convolve_transpose(grads, X, 5) * stacked)
        self.assertAlmostEqual(lhs, rhs, places=10)

    def test_height_mismatch(self):
        with self.assertRaises(DimensionError):
            convolve(np.ones((3, 4)), SpikeMatrix(2, 10, [], []))


class ObjectiveTermTests(SimpleTestCase):
    trace = np.array([0.5, 1.0, 0.5, 0.0])

    def test_variance(self):
        self.assertAlmostEqual(variance_term(self.trace), 0.125)
        self.assertEqual(variance_term(np.full(6, 2.5)), 0.0)
        self.assertAlmostEqual(variance_term(self.trace + 3.0), 0.125)

    def test_total_variation(self):
        self.assertAlmostEqual(tv_term(self.trace), 0.1875)
        self.assertEqual(tv_term(np.ones(5)), 0.0)
        self.assertAlmostEqual(tv_term(self.trace[::-1]), tv_term(self.trace))
        with self.assertRaises(DimensionError):
            tv_term([1.0])

    def test_cross_correlation(self):
        a, b = np.array([1.0, 0, 0, 0]), np.array([0, 0, 1.0, 0])
        self.assertAlmostEqual(xcorr_term(a, b, 1), -1 / 12)
        self.assertAlmostEqual(xcorr_term(a, b, 2), 5 / 6)
        self.assertEqual(pair_correlation(a, b, 2).lag, 2)
        self.assertEqual(xcorr_term(np.zeros(4), b, 3), 0.0)
        rng = np.random.default_rng(4)
        x, y = rng.random(30), rng.random(30)
        self.assertAlmostEqual(xcorr_term(x, y, 5), xcorr_term(y, x, 5))
        self.assertAlmostEqual(xcorr_term(x, x, 5), 1.0)
        self.assertAlmostEqual(xcorr_term(x, 3.0 * x + 2.0, 0), 1.0)
        with self.assertRaises(DimensionError):
            xcorr_term(x, y[:-1], 1)
        with self.assertRaises(ParameterError):
            xcorr_term(x, y, -1)

    def test_shift_pads_with_zeros(self):
        values = np.arange(1.0, 6.0)
        np.testing.assert_array_equal(shift(values, 2), [3, 4, 5, 0, 0])
        np.testing.assert_array_equal(shift(values, -1), [0, 1, 2, 3, 4])
        np.testing.assert_array_equal(shift(values, 0), values)
        np.testing.assert_array_equal(shift(values, 7), np.zeros(5))

    def test_breakdown_total(self):
        rng = np.random.default_rng(6)
        traces = rng.random((3, 40))
        b = breakdown_from_traces(traces, 2.0, 0.5, 3)
        expected = sum(-v + 2.0 * tv for v, tv in zip(b.per_filter_variance, b.tv)) + 0.5 * b.xcorr
        self.assertAlmostEqual(b.total, expected)


class LossTests(SimpleTestCase):

    def setUp(self):
        self.X = random_matrix(np.random.default_rng(7), 6, 40, 0.3)

    def test_single_filter_drops_cross_correlation(self):
        bank = init_direct(6, 4, 1, seed=0)
        b = loss(bank, self.X, FitConfig(beta_tv=3.0, beta_xcor=10.0))
        self.assertEqual(b.beta_xcor, 0.0)
        self.assertAlmostEqual(b.total, -b.per_filter_variance[0] + 3.0 * b.tv[0])

    def test_variance_only(self):
        bank = init_direct(6, 4, 2, seed=0)
        b = loss(bank, self.X, FitConfig(beta_tv=0.0, beta_xcor=0.0))
        self.assertAlmostEqual(b.total, -sum(b.per_filter_variance))

    def test_lag_bound_defaults_to_width(self):
        bank = init_direct(6, 4, 2, seed=0)
        self.assertEqual(loss(bank, self.X, FitConfig()).j, 4)
        self.assertEqual(loss(bank, self.X, FitConfig(j=2)).j, 2)

    def test_identical_filters_have_maximal_cross_correlation(self):
        single = init_direct(6, 4, 1, seed=2)
        twins = FilterBank(DIRECT, 6, 4, 2, np.concatenate([single.params, single.params]))
        self.assertAlmostEqual(loss(twins, self.X, FitConfig()).xcorr, 1.0)
        self.assertLess(loss(init_direct(6, 4, 2, seed=2), self.X, FitConfig()).xcorr, 1.0)

    def test_zero_raster_has_zero_gradient(self):
        X = SpikeMatrix(6, 40, [], [])
        for bank in (init_direct(6, 4, 2, seed=1), init_gaussian(6, 4, 2, 2.0, seed=1)):
            np.testing.assert_array_equal(gradient(bank, X, FitConfig()), 0.0)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            loss(init_direct(5, 4, 1, seed=0), self.X, FitConfig())


class GradientTests(SimpleTestCase):
    """Hand-written gradients against central finite differences."""

    step = 1e-5
    configs = (
        FitConfig(beta_tv=0.0, beta_xcor=0.0),
        FitConfig(beta_tv=5.0, beta_xcor=0.0),
        FitConfig(beta_tv=0.0, beta_xcor=3.0, j=2),
        FitConfig(beta_tv=100.0, beta_xcor=10.0),
    )

    def numeric_gradient(self, bank, X, config):
        params = bank.params
        numeric = np.zeros_like(params)
        for index in np.ndindex(params.shape):
            up, down = params.copy(), params.copy()
            up[index] += self.step
            down[index] -= self.step
            numeric[index] = (loss(bank.with_params(up), X, config).total
                              - loss(bank.with_params(down), X, config).total) / (2 * self.step)
        return numeric

    def assertGradientMatches(self, bank, X, config):
        analytic = gradient(bank, X, config)
        numeric = self.numeric_gradient(bank, X, config)
        scale = max(np.abs(numeric).max(), 1e-8)
        error = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-2 * scale)
        self.assertLess(error.max(), 1e-4, f'{bank!r} {config}')

    def instances(self, seed, count):
        rng = np.random.default_rng(seed)
        for _ in range(count):
            n_neurons, width = int(rng.integers(2, 9)), int(rng.integers(2, 7))
            n_bins, n_filters = int(rng.integers(10, 51)), int(rng.integers(1, 3))
            yield rng, random_matrix(rng, n_neurons, n_bins, 0.3), n_neurons, width, n_filters

    def test_direct_bank(self):
        for i, (rng, X, n, m, k) in enumerate(self.instances(10, 8)):
            bank = FilterBank(DIRECT, n, m, k, rng.normal(0.0, 0.5, (k, n, m)))
            self.assertGradientMatches(bank, X, self.configs[i % len(self.configs)])

    def test_unit_sum_gaussian_bank(self):
        for i, (rng, X, n, m, k) in enumerate(self.instances(11, 8)):
            bank = FilterBank(GAUSSIAN, n, m, k, rng.uniform(0, m - 1, (k, n)), sigma=1.5)
            self.assertGradientMatches(bank, X, self.configs[i % len(self.configs)])

    def test_unnormalized_gaussian_bank(self):
        for i, (rng, X, n, m, k) in enumerate(self.instances(12, 6)):
            bank = FilterBank(GAUSSIAN, n, m, k, rng.uniform(0, m - 1, (k, n)), sigma=1.5,
                              normalized=False)
            self.assertGradientMatches(bank, X, self.configs[i % len(self.configs)])

    def test_every_term_on_one_instance(self):
        rng = np.random.default_rng(13)
        X = random_matrix(rng, 6, 40, 0.3)
        bank = FilterBank(DIRECT, 6, 4, 2, rng.normal(0.0, 0.5, (2, 6, 4)))
        for config in self.configs:
            self.assertGradientMatches(bank, X, config)

    def test_small_step_descends(self):
        X = sequence_data()
        config = FitConfig(beta_tv=100.0)
        for bank in (init_direct(20, 40, 1, seed=3), init_gaussian(20, 40, 1, 8.0, seed=3)):
            before = loss(bank, X, config).total
            stepped = bank.with_params(bank.params - 1e-3 * gradient(bank, X, config))
            self.assertLess(loss(stepped, X, config).total, before)

    def test_step_from_identical_filters_descends(self):
        X = sequence_data(seed=1)
        single = init_direct(20, 40, 1, seed=4)
        bank = FilterBank(DIRECT, 20, 40, 2, np.concatenate([single.params, single.params]))
        config = FitConfig(beta_tv=100.0, beta_xcor=10.0)
        _, before, grads = evaluate(bank, X, config)
        params, _ = adam_step(bank.params, grads, None, 1e-5)
        self.assertLess(loss(bank.with_params(params), X, config).total, before.total)


class AdamTests(SimpleTestCase):

    def test_zero_gradient_is_a_fixed_point(self):
        params = np.array([1.0, -2.0, 3.0])
        updated, state = adam_step(params, np.zeros(3), None, 0.1)
        np.testing.assert_array_equal(updated, params)
        self.assertEqual(state.step, 1)

    def test_first_step_moves_by_the_learning_rate(self):
        params = np.array([0.5, 0.5, 0.5])
        grads = np.array([2.0, -0.01, 300.0])
        updated, _ = adam_step(params, grads, None, 0.1)
        np.testing.assert_allclose(updated, params - 0.1 * np.sign(grads), rtol=1e-6)

    def test_pure_and_repeatable(self):
        params, grads = np.ones(4), np.arange(4.0)
        state = AdamState.zeros_like(params)
        first = adam_step(params, grads, state, 0.1)
        second = adam_step(params, grads, state, 0.1)
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(params, np.ones(4))
        self.assertEqual(state.step, 0)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            adam_step(np.ones(3), np.ones(4), None, 0.1)


class FitTests(SimpleTestCase):

    def setUp(self):
        self.X = sequence_data()

    def test_config_validation(self):
        with self.assertRaises(FitConfigError):
            FitConfig(n_steps=0)
        with self.assertRaises(FitConfigError):
            FitConfig(lrate=0.0)
        with self.assertRaises(FitConfigError):
            FitConfig(early_stop=0)

    def test_fit_is_deterministic_and_traces_are_final(self):
        config = FitConfig(n_steps=15, seed=2)
        first = fit(self.X, init_direct(20, 40, 1, seed=2), config)
        second = fit(self.X, init_direct(20, 40, 1, seed=2), config)
        np.testing.assert_array_equal(first.bank.params, second.bank.params)
        self.assertEqual([b.total for b in first.loss_history],
                         [b.total for b in second.loss_history])
        np.testing.assert_array_equal(first.trace_matrix(),
                                      convolve_bank(kernels(first.bank), self.X))
        self.assertEqual(first.steps_run, 15)
        self.assertEqual(len(first.loss_history), 15)
        self.assertFalse(first.stopped_early)

    def test_training_raises_variance(self):
        config = FitConfig(n_steps=60, beta_tv=0.0)
        result = fit(self.X, init_direct(20, 40, 1, seed=5), config)
        history = result.loss_history
        self.assertLess(history[-1].total, history[0].total)
        self.assertGreater(history[-1].per_filter_variance[0], history[0].per_filter_variance[0])

    def test_gaussian_means_step_in_units_of_sigma(self):
        bank = init_gaussian(20, 40, 1, 8.0, seed=3)
        result = fit(self.X, bank, FitConfig(n_steps=1, beta_tv=0.0))
        moved = np.abs(result.bank.means - bank.means)
        np.testing.assert_allclose(moved.max(), 0.1 * 8.0, rtol=1e-4)

    def test_gaussian_means_travel_across_the_window(self):
        bank = init_gaussian(20, 40, 1, 8.0, seed=3)
        result = fit(self.X, bank, FitConfig(n_steps=40, beta_tv=0.0))
        self.assertGreater(np.abs(result.bank.means - bank.means).max(), 40 / 4)

    def test_two_filters_learn_the_two_directions(self):
        X, truth = forward_and_reverse()
        result = fit(X, init_direct(30, 40, 2, seed=6),
                     FitConfig(n_steps=150, beta_tv=1.0, beta_xcor=10.0))
        preferred = []
        for values in result.trace_matrix():
            heights = [np.mean([values[max(c - 20, 0):c + 20].max() for c in truth.centers(tau)])
                       for tau in (0, 1)]
            preferred.append(int(np.argmax(heights)))
        self.assertEqual(sorted(preferred), [0, 1])
        members = list(truth.members_per_type[0])
        forward, backward = (filter_latencies(result.bank, preferred.index(tau))[members]
                             for tau in (0, 1))
        self.assertLess(spearmanr(forward, backward).statistic, -0.5)

    def test_early_stop(self):
        config = FitConfig(n_steps=20, early_stop=1)
        result = fit(self.X, init_direct(20, 40, 1, seed=1), config, alpha=0.0)
        self.assertTrue(result.stopped_early)
        self.assertEqual(result.steps_run, 0)
        self.assertEqual(result.loss_history, [])
        unreachable = fit(self.X, init_direct(20, 40, 1, seed=1), config, alpha=1e9)
        self.assertFalse(unreachable.stopped_early)
        self.assertEqual(unreachable.steps_run, 20)


class TraceFileTests(SimpleTestCase):

    def test_one_column_per_filter(self):
        values = np.random.default_rng(8).random((2, 6))
        with tempfile.TemporaryDirectory() as tmp:
            path = save_traces(values, Path(tmp) / 'traces.csv')
            lines = path.read_text().splitlines()
            self.assertEqual(lines[0], 'filter_0,filter_1')
            self.assertEqual(len(lines), 7)
            loaded = load_traces(path)
        self.assertEqual([t.filter_index for t in loaded], [0, 1])
        np.testing.assert_array_equal(np.vstack([t.values for t in loaded]), values)


class FitCommandTests(TestCase):

    def test_fit_writes_bank_traces_plots_and_report(self):
        X = sequence_data()
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp)
            save_spike_matrix(X, out / 'x.coo')
            call_command('fit', input=str(out / 'x.coo'), K=2, M=40, n_steps=5, seed=3,
                         plots=True, out_dir=str(out), stdout=StringIO())
            bank = load_bank(out / 'bank.json')
            self.assertEqual((bank.n_filters, bank.width), (2, 40))
            self.assertEqual(len(load_traces(out / 'traces.csv')), 2)
            report = json.loads((out / 'fit_report.json').read_text())
            self.assertEqual(len(report['summary']['loss_history']), 5)
            self.assertEqual(len(report['summary']['variance_history'][0]), 2)
            self.assertEqual(report['config']['params']['beta_xcor'], 10.0)
            for name in ('raster.svg', 'raster_sorted_k0.svg', 'traces.svg', 'loss.svg'):
                self.assertIn(str(out / name), report['manifest'])
            for path in report['manifest']:
                self.assertTrue(Path(path).exists(), path)
            wall = report['wall_clock']
            self.assertAlmostEqual(wall['total'], sum(v for k, v in wall.items() if k != 'total'))
