# spikecore/matrix.py
"""
Binary spike rasters and index permutations.

A ``SpikeMatrix`` stores only the coordinates of its 1-entries, sorted by
(neuron, bin). Background densities of real recordings are a few spikes per
thousand cells, so the sparse form is what gets passed around; ``dense()``
builds the N x T view on demand.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, ParameterError, PermutationError


def _frozen(array):
    array = np.ascontiguousarray(array, dtype=np.int64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Permutation:
    """A bijection on [0, len(indices))."""

    indices: np.ndarray

    def __post_init__(self):
        indices = _frozen(self.indices)
        if indices.ndim != 1:
            raise PermutationError('permutation must be one-dimensional')
        n = indices.shape[0]
        if n and (indices.min() < 0 or indices.max() >= n
                  or np.unique(indices).shape[0] != n):
            raise PermutationError(f'indices are not a bijection on [0, {n})')
        object.__setattr__(self, 'indices', indices)

    @classmethod
    def identity(cls, n):
        return cls(np.arange(n))

    @classmethod
    def random(cls, n, rng):
        return cls(rng.permutation(n))

    def __len__(self):
        return int(self.indices.shape[0])

    def __getitem__(self, item):
        return self.indices[item]

    def __eq__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash(self.indices.tobytes())

    def inverse(self):
        inverse = np.empty_like(self.indices)
        inverse[self.indices] = np.arange(len(self))
        return Permutation(inverse)

    def compose(self, other):
        """Return ``p`` with ``p[i] = self[other[i]]``."""
        if len(other) != len(self):
            raise DimensionError(
                f'cannot compose permutations of length {len(self)} and {len(other)}'
            )
        return Permutation(self.indices[other.indices])

    def tolist(self):
        return self.indices.tolist()


@dataclass(frozen=True, eq=False)
class SpikeMatrix:
    """Immutable binary N x T raster; ``X[n, t] = 1`` for every stored pair."""

    n_neurons: int
    n_bins: int
    neurons: np.ndarray
    bins: np.ndarray

    def __post_init__(self):
        if self.n_neurons < 0 or self.n_bins < 0:
            raise DimensionError('matrix dimensions must be non-negative')
        neurons = np.asarray(self.neurons, dtype=np.int64).ravel()
        bins = np.asarray(self.bins, dtype=np.int64).ravel()
        if neurons.shape != bins.shape:
            raise DimensionError('neuron and bin index arrays differ in length')
        if neurons.size:
            if neurons.min() < 0 or neurons.max() >= self.n_neurons:
                raise DimensionError(f'neuron index out of range [0, {self.n_neurons})')
            if bins.min() < 0 or bins.max() >= self.n_bins:
                raise DimensionError(f'bin index out of range [0, {self.n_bins})')
        flat = np.unique(neurons * max(self.n_bins, 1) + bins)
        if flat.size != neurons.size:
            raise DimensionError('duplicate (neuron, bin) pairs')
        object.__setattr__(self, 'n_neurons', int(self.n_neurons))
        object.__setattr__(self, 'n_bins', int(self.n_bins))
        object.__setattr__(self, 'neurons', _frozen(flat // max(self.n_bins, 1)))
        object.__setattr__(self, 'bins', _frozen(flat % max(self.n_bins, 1)))

    @classmethod
    def from_pairs(cls, n_neurons, n_bins, pairs):
        pairs = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        return cls(n_neurons, n_bins, pairs[:, 0], pairs[:, 1])

    @classmethod
    def merged(cls, n_neurons, n_bins, neurons, bins):
        """Build from coordinates that may repeat; repeats collapse to one spike."""
        width = max(n_bins, 1)
        flat = np.unique(np.asarray(neurons, dtype=np.int64) * width
                         + np.asarray(bins, dtype=np.int64))
        return cls(n_neurons, n_bins, flat // width, flat % width)

    @classmethod
    def from_dense(cls, dense):
        dense = np.asarray(dense)
        if dense.ndim != 2:
            raise DimensionError('dense raster must be two-dimensional')
        if not np.isin(dense, (0, 1)).all():
            raise DimensionError('dense raster must be binary')
        neurons, bins = np.nonzero(dense)
        return cls(dense.shape[0], dense.shape[1], neurons, bins)

    @classmethod
    def union(cls, *matrices):
        """Binary OR of equally shaped matrices."""
        first = matrices[0]
        for other in matrices[1:]:
            if other.shape != first.shape:
                raise DimensionError(f'cannot combine {first.shape} with {other.shape}')
        return cls.merged(first.n_neurons, first.n_bins,
                          np.concatenate([m.neurons for m in matrices]),
                          np.concatenate([m.bins for m in matrices]))

    @property
    def shape(self):
        return (self.n_neurons, self.n_bins)

    @property
    def n_spikes(self):
        return int(self.neurons.shape[0])

    @property
    def density(self):
        cells = self.n_neurons * self.n_bins
        return self.n_spikes / cells if cells else 0.0

    @property
    def spikes(self):
        return set(zip(self.neurons.tolist(), self.bins.tolist()))

    def dense(self, dtype=np.float64):
        out = np.zeros(self.shape, dtype=dtype)
        out[self.neurons, self.bins] = 1
        return out

    def __eq__(self, other):
        if not isinstance(other, SpikeMatrix):
            return NotImplemented
        return (self.shape == other.shape
                and np.array_equal(self.neurons, other.neurons)
                and np.array_equal(self.bins, other.bins))

    def __hash__(self):
        return hash((self.shape, self.neurons.tobytes(), self.bins.tobytes()))

    def __repr__(self):
        return f'SpikeMatrix(N={self.n_neurons}, T={self.n_bins}, spikes={self.n_spikes})'


def permute_matrix(X, row_perm, col_perm):
    """Move every spike ``(n, t)`` to ``(row_perm[n], col_perm[t])``."""
    if len(row_perm) != X.n_neurons:
        raise DimensionError(f'row permutation has length {len(row_perm)}, expected N={X.n_neurons}')
    if len(col_perm) != X.n_bins:
        raise DimensionError(f'column permutation has length {len(col_perm)}, expected T={X.n_bins}')
    return SpikeMatrix(X.n_neurons, X.n_bins, row_perm[X.neurons], col_perm[X.bins])


def reorder_rows(X, order):
    """Row ``n`` of the result is row ``order[n]`` of ``X``."""
    if not isinstance(order, Permutation):
        order = Permutation(order)
    if len(order) != X.n_neurons:
        raise DimensionError(f'order has length {len(order)}, expected N={X.n_neurons}')
    return SpikeMatrix(X.n_neurons, X.n_bins, order.inverse()[X.neurons], X.bins)


def bernoulli_matrix(n_neurons, n_bins, density, seed):
    """Every cell is a spike independently with probability ``density``."""
    if not 0.0 <= density <= 1.0:
        raise ParameterError(f'density must lie in [0, 1], got {density}')
    rng = np.random.default_rng(seed)
    cells = n_neurons * n_bins
    count = int(rng.binomial(cells, density)) if cells else 0
    flat = np.sort(rng.choice(cells, size=count, replace=False)) if count else np.empty(0, np.int64)
    width = max(n_bins, 1)
    return SpikeMatrix(n_neurons, n_bins, flat // width, flat % width)
