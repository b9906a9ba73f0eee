import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from .exceptions import DimensionError, ParameterError, PermutationError, SpikeFormatError
from .io import COO_TEXT, DENSE_CSV, load_spike_matrix, save_spike_matrix
from .matrix import Permutation, SpikeMatrix, bernoulli_matrix, permute_matrix, reorder_rows


def small_matrix():
    return SpikeMatrix.from_pairs(2, 3, [(0, 0), (1, 2)])


class FileTestMixin:

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, name, text):
        path = self.dir / name
        path.write_text(text)
        return path


class SpikeMatrixTests(SimpleTestCase):

    def test_density_and_count(self):
        X = small_matrix()
        self.assertEqual(X.n_spikes, 2)
        self.assertAlmostEqual(X.density, 2 / 6)
        self.assertEqual(X.spikes, {(0, 0), (1, 2)})

    def test_rejects_out_of_range_and_duplicates(self):
        with self.assertRaises(DimensionError):
            SpikeMatrix.from_pairs(2, 3, [(2, 0)])
        with self.assertRaises(DimensionError):
            SpikeMatrix.from_pairs(2, 3, [(0, 3)])
        with self.assertRaises(DimensionError):
            SpikeMatrix.from_pairs(2, 3, [(0, 1), (0, 1)])

    def test_dense_view_matches_spikes(self):
        X = small_matrix()
        np.testing.assert_array_equal(X.dense(), [[1, 0, 0], [0, 0, 1]])
        self.assertEqual(SpikeMatrix.from_dense(X.dense()), X)

    def test_union_is_binary_or(self):
        a = SpikeMatrix.from_pairs(2, 3, [(0, 0), (1, 1)])
        b = SpikeMatrix.from_pairs(2, 3, [(1, 1), (1, 2)])
        self.assertEqual(SpikeMatrix.union(a, b).spikes, {(0, 0), (1, 1), (1, 2)})

    def test_bernoulli_matrix_is_seeded(self):
        a = bernoulli_matrix(40, 500, 0.01, seed=3)
        self.assertEqual(a, bernoulli_matrix(40, 500, 0.01, seed=3))
        self.assertNotEqual(a, bernoulli_matrix(40, 500, 0.01, seed=4))
        self.assertLess(abs(a.density - 0.01), 0.005)
        with self.assertRaises(ParameterError):
            bernoulli_matrix(4, 10, 1.5, seed=0)


class PermutationTests(SimpleTestCase):

    def test_rejects_non_bijection(self):
        with self.assertRaises(PermutationError):
            Permutation([0, 0, 1])
        with self.assertRaises(PermutationError):
            Permutation([0, 3, 1])

    def test_inverse_and_compose(self):
        p = Permutation([2, 0, 1])
        self.assertEqual(p.compose(p.inverse()), Permutation.identity(3))
        self.assertEqual(p.compose(Permutation([1, 2, 0])).tolist(), [0, 1, 2])


class PermuteTests(SimpleTestCase):

    def test_identity_permutations(self):
        X = small_matrix()
        self.assertEqual(permute_matrix(X, Permutation.identity(2), Permutation.identity(3)), X)

    def test_row_swap(self):
        X = permute_matrix(small_matrix(), Permutation([1, 0]), Permutation.identity(3))
        self.assertEqual(X.spikes, {(1, 0), (0, 2)})

    def test_length_mismatch(self):
        with self.assertRaises(DimensionError):
            permute_matrix(small_matrix(), Permutation.identity(3), Permutation.identity(3))
        with self.assertRaises(DimensionError):
            reorder_rows(small_matrix(), [0, 1, 2])

    def test_random_permutations_preserve_count(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            X = bernoulli_matrix(int(rng.integers(1, 30)), int(rng.integers(1, 80)), 0.1,
                                 seed=int(rng.integers(1 << 30)))
            Y = permute_matrix(X, Permutation.random(X.n_neurons, rng),
                               Permutation.random(X.n_bins, rng))
            self.assertEqual(Y.n_spikes, X.n_spikes)

    def test_reorder_rows(self):
        X = small_matrix()
        self.assertEqual(reorder_rows(X, Permutation.identity(2)), X)
        swapped = reorder_rows(X, Permutation([1, 0]))
        np.testing.assert_array_equal(swapped.dense(), X.dense()[[1, 0]])

    def test_reorder_then_inverse(self):
        X = bernoulli_matrix(12, 50, 0.2, seed=1)
        order = Permutation.random(12, np.random.default_rng(5))
        self.assertEqual(reorder_rows(reorder_rows(X, order), order.inverse()), X)

    def test_reorder_composition_law(self):
        rng = np.random.default_rng(2)
        X = bernoulli_matrix(15, 40, 0.2, seed=9)
        p = Permutation.random(15, rng)
        q = Permutation.random(15, rng)
        self.assertEqual(reorder_rows(reorder_rows(X, p), q), reorder_rows(X, p.compose(q)))
        np.testing.assert_array_equal(reorder_rows(X, p).dense(), X.dense()[p.indices])


class LoadSpikeMatrixTests(FileTestMixin, SimpleTestCase):

    def test_coo_text(self):
        path = self.write('x.coo', 'N=2 T=3\n0 0\n1 2\n')
        self.assertEqual(load_spike_matrix(path, COO_TEXT), small_matrix())

    def test_dense_csv_with_header(self):
        path = self.write('x.csv', '# N=2 T=3\n1,0,0\n0,0,1\n')
        self.assertEqual(load_spike_matrix(path, DENSE_CSV), small_matrix())

    def test_dense_csv_infers_dimensions(self):
        path = self.write('x.csv', '1,0,0\n0,0,1\n')
        self.assertEqual(load_spike_matrix(path), small_matrix())

    def test_dense_csv_non_binary(self):
        path = self.write('x.csv', '# N=2 T=3\n1,0,0\n0,2,1\n')
        with self.assertRaisesMessage(SpikeFormatError, 'non-binary value') as ctx:
            load_spike_matrix(path, DENSE_CSV)
        self.assertEqual(ctx.exception.line, 3)

    def test_malformed_header(self):
        path = self.write('x.coo', 'N=2\n0 0\n')
        with self.assertRaisesMessage(SpikeFormatError, 'malformed header'):
            load_spike_matrix(path, COO_TEXT)

    def test_out_of_range_index_names_line(self):
        path = self.write('x.coo', 'N=2 T=3\n0 0\n5 1\n')
        with self.assertRaises(SpikeFormatError) as ctx:
            load_spike_matrix(path, COO_TEXT)
        self.assertEqual(ctx.exception.line, 3)


class SaveSpikeMatrixTests(FileTestMixin, SimpleTestCase):

    def round_trip(self, X, format):
        path = self.dir / ('x.csv' if format == DENSE_CSV else 'x.coo')
        save_spike_matrix(X, path, format)
        return load_spike_matrix(path, format)

    def test_small_round_trip(self):
        for format in (COO_TEXT, DENSE_CSV):
            self.assertEqual(self.round_trip(small_matrix(), format), small_matrix())

    def test_empty_round_trip(self):
        X = SpikeMatrix.from_pairs(3, 4, [])
        for format in (COO_TEXT, DENSE_CSV):
            Y = self.round_trip(X, format)
            self.assertEqual(Y, X)
            self.assertEqual(Y.spikes, set())

    def test_zero_bins_round_trip(self):
        X = SpikeMatrix.from_pairs(3, 0, [])
        for format in (COO_TEXT, DENSE_CSV):
            self.assertEqual(self.round_trip(X, format).shape, (3, 0))

    def test_full_size_round_trip(self):
        X = bernoulli_matrix(452, 18137, 0.003, seed=11)
        self.assertEqual(self.round_trip(X, COO_TEXT), X)

    def test_random_round_trips(self):
        rng = np.random.default_rng(123)
        for _ in range(100):
            X = bernoulli_matrix(int(rng.integers(1, 65)), int(rng.integers(1, 257)),
                                 float(rng.uniform(0, 0.3)), seed=int(rng.integers(1 << 30)))
            for format in (COO_TEXT, DENSE_CSV):
                self.assertEqual(self.round_trip(X, format), X)
