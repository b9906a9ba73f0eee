import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.test import SimpleTestCase, TestCase

from optengine.training import FitConfig, fit
from spikecore.exceptions import DimensionError, SpikeFormatError
from spikecore.io import load_spike_matrix, save_spike_matrix
from spikecore.matrix import Permutation, SpikeMatrix, bernoulli_matrix
from synthgen.embed import embed_sequences
from synthgen.specs import SequenceSpec

from .bank import (DEFAULT_INIT_SCALE, DIRECT, GAUSSIAN, FilterBank, FilterBankError, init_bank,
                   init_direct, init_gaussian, kernels, materialize)
from .sorting import filter_latencies, sort_bank, sort_filter, sorted_rasters
from .storage import load_bank, save_bank


def direct_bank(rows):
    rows = np.asarray(rows, dtype=np.float64)
    return FilterBank(DIRECT, rows.shape[0], rows.shape[1], 1, rows[None])


class DirectBankTests(SimpleTestCase):

    def test_rows_are_stochastic(self):
        bank = init_direct(7, 11, 3, seed=0)
        rows = kernels(bank)
        self.assertEqual(rows.shape, (3, 7, 11))
        self.assertTrue((rows >= 0).all())
        np.testing.assert_allclose(rows.sum(axis=-1), 1.0, atol=1e-9)

    def test_softmax_of_constants_and_extremes(self):
        np.testing.assert_allclose(materialize(direct_bank([[0, 0]]), 0), [[0.5, 0.5]])
        np.testing.assert_allclose(materialize(direct_bank([[3, 3, 3, 3]]), 0), [[0.25] * 4])
        row = materialize(direct_bank([[100, 0]]), 0)[0]
        self.assertTrue(np.isfinite(row).all())
        self.assertAlmostEqual(row[0], 1.0 / (1.0 + np.exp(-100.0)), places=15)
        self.assertAlmostEqual(row[1], np.exp(-100.0) / (1.0 + np.exp(-100.0)), places=50)

    def test_init_is_seeded(self):
        bank = init_direct(5, 4, 2, seed=3)
        self.assertEqual(bank, init_direct(5, 4, 2, seed=3))
        self.assertNotEqual(bank, init_direct(5, 4, 2, seed=4))
        self.assertLess(abs(bank.params.std() - DEFAULT_INIT_SCALE), 0.2)

    def test_zero_dimension(self):
        with self.assertRaises(DimensionError):
            init_direct(0, 4, 1, seed=0)
        with self.assertRaises(DimensionError):
            init_direct(4, 4, 0, seed=0)

    def test_parameters_are_read_only(self):
        bank = init_direct(2, 3, 1, seed=0)
        with self.assertRaises(ValueError):
            bank.params[0, 0, 0] = 1.0


class GaussianBankTests(SimpleTestCase):

    def test_symmetric_unit_sum_row(self):
        bank = FilterBank(GAUSSIAN, 1, 5, 1, [[2.0]], sigma=1.0)
        row = materialize(bank, 0)[0]
        self.assertAlmostEqual(row.sum(), 1.0, places=12)
        self.assertAlmostEqual(row[1], row[3])
        self.assertAlmostEqual(row[0], row[4])
        self.assertEqual(int(np.argmax(row)), 2)

    def test_unnormalized_rows_peak_at_one(self):
        bank = FilterBank(GAUSSIAN, 1, 9, 1, [[4.0]], sigma=2.0, normalized=False)
        row = materialize(bank, 0)[0]
        self.assertAlmostEqual(row[4], 1.0)
        self.assertAlmostEqual(row[6], np.exp(-0.5))

    def test_init_means_within_window(self):
        bank = init_gaussian(50, 30, 2, sigma=16.0, seed=1)
        self.assertEqual(bank.sigma, 16.0)
        self.assertTrue(((bank.means >= 0) & (bank.means <= 29)).all())
        np.testing.assert_array_equal(bank.means, init_gaussian(50, 30, 2, seed=1).means)

    def test_rows_are_stochastic_even_outside_the_window(self):
        bank = FilterBank(GAUSSIAN, 3, 6, 1, [[-4.0, 2.5, 40.0]], sigma=1.5)
        np.testing.assert_allclose(kernels(bank).sum(axis=-1), 1.0, atol=1e-9)

    def test_shift_moves_rows(self):
        bank = FilterBank(GAUSSIAN, 1, 80, 1, [[30.0]], sigma=3.0)
        shifted = bank.with_params(bank.params + 7)
        np.testing.assert_allclose(materialize(shifted, 0)[0, 7:], materialize(bank, 0)[0, :-7],
                                   atol=1e-12)

    def test_invalid_sigma(self):
        with self.assertRaises(FilterBankError):
            init_gaussian(3, 5, 1, sigma=0.0, seed=0)
        with self.assertRaises(FilterBankError):
            init_bank('wavelet', 3, 5, 1, seed=0)


class SortingTests(SimpleTestCase):

    def test_order_follows_latencies(self):
        rows = np.full((3, 10), -5.0)
        for n, latency in enumerate((5, 2, 9)):
            rows[n, latency] = 5.0
        result = sort_filter(direct_bank(rows), 0)
        np.testing.assert_array_equal(result.latencies, [5, 2, 9])
        self.assertEqual(result.order.tolist(), [1, 0, 2])

    def test_uniform_row_has_latency_zero(self):
        self.assertEqual(filter_latencies(direct_bank(np.zeros((1, 8))), 0).tolist(), [0])

    def test_ties_keep_neuron_order(self):
        bank = FilterBank(GAUSSIAN, 4, 10, 1, [[3.0, 1.0, 3.0, 1.0]], sigma=2.0)
        self.assertEqual(sort_filter(bank, 0).order.tolist(), [1, 3, 0, 2])

    def test_sorting_a_permuted_bank(self):
        bank = init_gaussian(9, 20, 1, seed=4)
        perm = Permutation(np.random.default_rng(0).permutation(9))
        original = sort_filter(bank, 0).order
        permuted = sort_filter(bank.permute_rows(perm), 0).order
        self.assertEqual(perm.compose(permuted), original)

    def test_sorted_raster_makes_sequence_diagonal(self):
        # neuron n fires at bin 10 + 3 * latency_rank(n)
        ranks = [4, 0, 3, 1, 2]
        X = SpikeMatrix.from_pairs(5, 40, [(n, 10 + 3 * r) for n, r in enumerate(ranks)])
        rows = np.full((5, 16), -3.0)
        for n, r in enumerate(ranks):
            rows[n, 3 * r] = 3.0
        sorted_X, = sorted_rasters(X, direct_bank(rows))
        times = sorted_X.bins[np.argsort(sorted_X.neurons)]
        self.assertTrue((np.diff(times) > 0).all())

    def test_fitted_filter_sorts_a_sequence_into_order(self):
        members = (11, 2, 7, 0, 14, 5)
        spec = SequenceSpec(members, 50, 200)
        X, truth = embed_sequences(bernoulli_matrix(15, 1200, 0.0, seed=0), [spec], seed=0)
        result = fit(X, init_direct(15, 80, 1, seed=1), FitConfig(n_steps=150, beta_tv=0.0))
        sorted_X, = sorted_rasters(X, result.bank)
        for center in truth.centers(0):
            inside = (sorted_X.bins >= center - 30) & (sorted_X.bins <= center + 30)
            rows, bins = sorted_X.neurons[inside], sorted_X.bins[inside]
            self.assertEqual(len(rows), len(members))
            self.assertTrue((np.diff(bins[np.argsort(rows)]) > 0).all(), center)

    def test_one_result_per_filter(self):
        bank = init_direct(4, 6, 3, seed=2)
        self.assertEqual([r.filter_index for r in sort_bank(bank)], [0, 1, 2])


class StorageTests(SimpleTestCase):

    def test_banks_survive_disk(self):
        with tempfile.TemporaryDirectory() as tmp:
            for bank in (init_direct(4, 6, 2, seed=1),
                         init_gaussian(4, 6, 2, sigma=2.5, seed=1, normalized=False)):
                path = save_bank(bank, Path(tmp) / f'{bank.variant}.json')
                self.assertEqual(load_bank(path), bank)

    def test_rejects_foreign_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'bank.json'
            path.write_text(json.dumps({'format': 'something-else'}))
            with self.assertRaises(SpikeFormatError):
                load_bank(path)
            path.write_text('{"format": ')
            with self.assertRaises(SpikeFormatError):
                load_bank(path)


class SortCommandTests(TestCase):

    def test_sort_writes_orders_and_rasters(self):
        ranks = [2, 0, 1]
        X = SpikeMatrix.from_pairs(3, 30, [(n, 5 + 4 * r) for n, r in enumerate(ranks)])
        bank = FilterBank(GAUSSIAN, 3, 12, 1, [[8.0, 0.0, 4.0]], sigma=2.0)
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp)
            save_spike_matrix(X, out / 'x.coo')
            save_bank(bank, out / 'bank.json')
            call_command('sort', load=str(out / 'bank.json'), input=str(out / 'x.coo'),
                         out_dir=str(out), stdout=StringIO())
            sorted_X = load_spike_matrix(out / 'sorted_k0.coo')
            self.assertEqual(sorted_X.spikes, {(0, 5), (1, 9), (2, 13)})
            lines = (out / 'order_k0.csv').read_text().splitlines()
            self.assertEqual(lines[0], 'row,neuron,latency')
            self.assertEqual([line.split(',')[1] for line in lines[1:]], ['1', '2', '0'])
