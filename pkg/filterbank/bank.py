# filterbank/bank.py
"""
Filter banks and their two parameterizations.

Direct: every filter is an N x M matrix of raw weights; the kernel row is the
softmax of the raw row over time.

Gaussian: every filter row is a Gaussian bump over the bins 0..M-1 with a
learnable mean and a shared fixed sigma. Normalized rows are the softmax of
the Gaussian log-density, i.e. the bump divided by its truncated sum, so both
parameterizations yield row-stochastic kernels. Unnormalized rows have
amplitude 1 at the mean. Means are stored in bins but optimized in units of
sigma, so one optimizer step moves a bump by up to about ``lrate * sigma``
bins.
"""

from dataclasses import dataclass, replace

import numpy as np

from spikecore.exceptions import ConvseqError, DimensionError
from spikecore.matrix import Permutation

DIRECT = 'direct'
GAUSSIAN = 'gaussian'
VARIANTS = (DIRECT, GAUSSIAN)

DEFAULT_INIT_SCALE = 0.5
DEFAULT_SIGMA = 16.0


class FilterBankError(ConvseqError, ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FilterBank:
    """
    ``params`` is (K, N, M) raw weights for direct banks and (K, N) means for
    Gaussian banks.
    """

    variant: str
    n_neurons: int
    width: int
    n_filters: int
    params: np.ndarray
    sigma: float = None
    normalized: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise FilterBankError(f'unknown variant {self.variant!r}, expected one of {VARIANTS}')
        params = np.array(self.params, dtype=np.float64)
        params.setflags(write=False)
        expected = self.param_shape
        if params.shape != expected:
            raise DimensionError(f'{self.variant} parameters have shape {params.shape}, '
                                 f'expected {expected}')
        if self.variant == GAUSSIAN and not (self.sigma and self.sigma > 0):
            raise FilterBankError(f'sigma must be positive, got {self.sigma}')
        object.__setattr__(self, 'params', params)

    @property
    def param_shape(self):
        if self.variant == DIRECT:
            return (self.n_filters, self.n_neurons, self.width)
        return (self.n_filters, self.n_neurons)

    @property
    def step_scale(self):
        """Length the optimizer takes as one unit: sigma bins for means, 1 for raw weights."""
        return self.sigma if self.variant == GAUSSIAN else 1.0

    @property
    def means(self):
        if self.variant != GAUSSIAN:
            raise FilterBankError('only Gaussian banks have means')
        return self.params

    def with_params(self, params):
        return replace(self, params=params)

    def permute_rows(self, perm):
        """Bank whose row ``i`` is row ``perm[i]`` of this one, for every filter."""
        if not isinstance(perm, Permutation):
            perm = Permutation(perm)
        if len(perm) != self.n_neurons:
            raise DimensionError(f'permutation has length {len(perm)}, expected N={self.n_neurons}')
        return self.with_params(self.params[:, perm.indices])

    def __eq__(self, other):
        if not isinstance(other, FilterBank):
            return NotImplemented
        return (self.variant, self.n_neurons, self.width, self.n_filters, self.sigma,
                self.normalized) == (other.variant, other.n_neurons, other.width,
                                     other.n_filters, other.sigma, other.normalized) \
            and np.array_equal(self.params, other.params)

    def __repr__(self):
        extra = f', sigma={self.sigma}' if self.variant == GAUSSIAN else ''
        return (f'FilterBank({self.variant}, N={self.n_neurons}, M={self.width}, '
                f'K={self.n_filters}{extra})')


def _check_dims(n_neurons, width, n_filters):
    if min(n_neurons, width, n_filters) < 1:
        raise DimensionError(f'N, M and K must be at least 1, got N={n_neurons} M={width} '
                             f'K={n_filters}')


def init_direct(n_neurons, width, n_filters, seed, scale=DEFAULT_INIT_SCALE):
    """Raw weights drawn i.i.d. from normal(0, scale**2)."""
    _check_dims(n_neurons, width, n_filters)
    rng = np.random.default_rng(seed)
    weights = rng.normal(0.0, scale, size=(n_filters, n_neurons, width))
    return FilterBank(DIRECT, n_neurons, width, n_filters, weights)


def init_gaussian(n_neurons, width, n_filters, sigma=DEFAULT_SIGMA, seed=None, normalized=True):
    """Means drawn uniformly over [0, M-1]."""
    _check_dims(n_neurons, width, n_filters)
    if not sigma or sigma <= 0:
        raise FilterBankError(f'sigma must be positive, got {sigma}')
    rng = np.random.default_rng(seed)
    means = rng.uniform(0.0, width - 1, size=(n_filters, n_neurons))
    return FilterBank(GAUSSIAN, n_neurons, width, n_filters, means, sigma=float(sigma),
                      normalized=normalized)


def softmax_rows(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=-1, keepdims=True)


def gaussian_offsets(means, width):
    """``m - mu`` for every bin m, shape means.shape + (M,)."""
    return np.arange(width, dtype=np.float64) - np.asarray(means)[..., None]


def gaussian_logits(means, sigma, width):
    return -gaussian_offsets(means, width) ** 2 / (2.0 * sigma ** 2)


def kernels(bank):
    """Dense kernels of every filter, shape (K, N, M)."""
    if bank.variant == DIRECT:
        return softmax_rows(bank.params)
    logits = gaussian_logits(bank.params, bank.sigma, bank.width)
    return softmax_rows(logits) if bank.normalized else np.exp(logits)


def materialize(bank, k):
    if not 0 <= k < bank.n_filters:
        raise DimensionError(f'filter index {k} outside [0, {bank.n_filters})')
    if bank.variant == DIRECT:
        return softmax_rows(bank.params[k])
    logits = gaussian_logits(bank.params[k], bank.sigma, bank.width)
    return softmax_rows(logits) if bank.normalized else np.exp(logits)


def init_bank(variant, n_neurons, width, n_filters, seed, sigma=DEFAULT_SIGMA, normalized=True,
              scale=DEFAULT_INIT_SCALE):
    if variant == DIRECT:
        return init_direct(n_neurons, width, n_filters, seed, scale)
    if variant == GAUSSIAN:
        return init_gaussian(n_neurons, width, n_filters, sigma, seed, normalized)
    raise FilterBankError(f'unknown variant {variant!r}, expected one of {VARIANTS}')
