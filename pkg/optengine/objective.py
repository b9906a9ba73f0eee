# optengine/objective.py
"""
The training objective and its exact gradient.

    L = sum_k [ -Var(x_k) + beta_tv * TV(x_k) ] + beta_xcor * sum_{l > k} xcorr(x_l, x_k, j)

Var uses population normalization and TV = (1/T) sum_t (x_t - x_{t+1})^2.
xcorr(a, b, j) is the largest normalized cross-correlation over lags
|tau| <= j::

    rho(tau) = (1/T) sum_t (a_t - mean a) (b_{t+tau} - mean b) / (sd_a sd_b)

with the centered trace zero outside [0, T). It lies in [-1, 1] and is 0 when
either trace is flat. Centering and normalizing make the term insensitive to
the shared mean and scale of the traces, so it only sees aligned peaks. The
cross-correlation term is dropped when K = 1.

Gradients flow back by hand: loss terms -> traces -> transposed convolution
-> per-row softmax Jacobian (direct banks) or the derivative of the Gaussian
row with respect to its mean (Gaussian banks). The xcorr gradient follows the
maximizing lag.
"""

from dataclasses import asdict, dataclass
from itertools import combinations

import numpy as np
from scipy import signal

from filterbank.bank import DIRECT, gaussian_offsets, kernels
from spikecore.exceptions import DimensionError, ParameterError

from .convolution import convolve_bank, convolve_transpose


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    per_filter_variance: tuple
    tv: tuple
    xcorr: float
    beta_tv: float
    beta_xcor: float
    j: int

    def to_dict(self):
        return asdict(self)


def _values(trace):
    return np.asarray(getattr(trace, 'values', trace), dtype=np.float64)


def variance_term(trace):
    values = _values(trace)
    centered = values - values.mean()
    return float(np.mean(centered * centered))


def tv_term(trace):
    values = _values(trace)
    if values.shape[0] < 2:
        raise DimensionError('total variation needs at least two bins')
    steps = np.diff(values)
    return float(np.dot(steps, steps) / values.shape[0])


def shift(values, lag):
    """``out[t] = values[t + lag]`` with zeros outside the trace."""
    n = values.shape[0]
    out = np.zeros_like(values)
    if lag >= 0:
        out[:max(n - lag, 0)] = values[lag:]
    else:
        out[-lag:] = values[:max(n + lag, 0)]
    return out


@dataclass(frozen=True)
class PairCorrelation:
    """Best lag of one trace pair, plus what its gradient needs."""

    value: float
    lag: int
    centered_a: np.ndarray = None
    centered_b: np.ndarray = None
    sd_a: float = 0.0
    sd_b: float = 0.0

    @property
    def flat(self):
        return self.centered_a is None


def pair_correlation(a, b, j):
    a, b = _values(a), _values(b)
    if a.shape != b.shape:
        raise DimensionError(f'traces have lengths {a.shape[0]} and {b.shape[0]}')
    if j < 0:
        raise ParameterError(f'lag bound must be non-negative, got {j}')
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        return PairCorrelation(0.0, 0)
    n = a.shape[0]
    centered_a, centered_b = a - a.mean(), b - b.mean()
    sd_a = float(np.sqrt(np.mean(centered_a * centered_a)))
    sd_b = float(np.sqrt(np.mean(centered_b * centered_b)))
    # correlate(b, a)[i] = sum_t a_t b_{t + lags[i]}
    sums = signal.correlate(centered_b, centered_a, mode='full')
    lags = signal.correlation_lags(n, n)
    inside = np.abs(lags) <= j
    best = int(np.argmax(sums[inside]))
    value = float(sums[inside][best] / (n * sd_a * sd_b))
    return PairCorrelation(value, int(lags[inside][best]), centered_a, centered_b, sd_a, sd_b)


def xcorr_term(trace_l, trace_k, j):
    return pair_correlation(trace_l, trace_k, j).value


def pair_gradients(pair):
    """d xcorr / d a and d xcorr / d b at the maximizing lag."""
    if pair.flat:
        return 0.0, 0.0
    n = pair.centered_a.shape[0]
    scale = n * pair.sd_a * pair.sd_b
    ahead = shift(pair.centered_b, pair.lag)
    behind = shift(pair.centered_a, -pair.lag)
    grad_a = (ahead - ahead.mean()) / scale - pair.value * pair.centered_a / (n * pair.sd_a ** 2)
    grad_b = (behind - behind.mean()) / scale - pair.value * pair.centered_b / (n * pair.sd_b ** 2)
    return grad_a, grad_b


def lag_bound(config, bank):
    return bank.width if config.j is None else int(config.j)


def effective_beta_xcor(config, bank):
    return 0.0 if bank.n_filters == 1 else float(config.beta_xcor)


def _check(bank, X):
    if bank.n_neurons != X.n_neurons:
        raise DimensionError(f'bank has N={bank.n_neurons}, data has N={X.n_neurons}')


def _pairs(traces, j):
    return {(l, k): pair_correlation(traces[l], traces[k], j)
            for k, l in combinations(range(len(traces)), 2)}


def breakdown_from_traces(traces, beta_tv, beta_xcor, j, pairs=None):
    variances = tuple(variance_term(x) for x in traces)
    tvs = tuple(tv_term(x) for x in traces)
    if pairs is None:
        pairs = _pairs(traces, j)
    xcorr = sum(pair.value for pair in pairs.values())
    total = sum(-v + beta_tv * tv for v, tv in zip(variances, tvs)) + beta_xcor * xcorr
    return LossBreakdown(float(total), variances, tvs, float(xcorr), float(beta_tv),
                         float(beta_xcor), int(j))


def trace_gradients(traces, beta_tv, beta_xcor, j, pairs=None):
    """dL/dx_k for every filter, shape (K, T)."""
    traces = np.asarray(traces, dtype=np.float64)
    n_bins = traces.shape[1]
    centered = traces - traces.mean(axis=1, keepdims=True)
    grads = -2.0 * centered / n_bins
    steps = np.diff(traces, axis=1)
    tv_grad = np.zeros_like(traces)
    tv_grad[:, :-1] -= steps
    tv_grad[:, 1:] += steps
    grads += beta_tv * 2.0 * tv_grad / n_bins
    if beta_xcor and traces.shape[0] > 1:
        if pairs is None:
            pairs = _pairs(traces, j)
        for (l, k), pair in pairs.items():
            grad_l, grad_k = pair_gradients(pair)
            grads[l] += beta_xcor * grad_l
            grads[k] += beta_xcor * grad_k
    return grads


def kernel_to_param_gradients(bank, rows, kernel_grads):
    """Pull dL/dkernel (K, N, M) back to the bank's parameters."""
    if bank.variant == DIRECT or bank.normalized:
        # softmax Jacobian-vector product, row by row
        local = rows * (kernel_grads - (rows * kernel_grads).sum(axis=-1, keepdims=True))
        if bank.variant == DIRECT:
            return local
        return (local * gaussian_offsets(bank.params, bank.width)).sum(axis=-1) / bank.sigma ** 2
    offsets = gaussian_offsets(bank.params, bank.width)
    return (kernel_grads * rows * offsets).sum(axis=-1) / bank.sigma ** 2


def evaluate(bank, X, config, with_gradient=True):
    """Traces, loss breakdown and (optionally) parameter gradients in one pass."""
    _check(bank, X)
    rows = kernels(bank)
    traces = convolve_bank(rows, X)
    j = lag_bound(config, bank)
    beta_xcor = effective_beta_xcor(config, bank)
    pairs = _pairs(traces, j)
    breakdown = breakdown_from_traces(traces, config.beta_tv, beta_xcor, j, pairs)
    if not with_gradient:
        return traces, breakdown, None
    trace_grads = trace_gradients(traces, config.beta_tv, beta_xcor, j, pairs)
    kernel_grads = convolve_transpose(trace_grads, X, bank.width)
    return traces, breakdown, kernel_to_param_gradients(bank, rows, kernel_grads)


def loss(bank, X, config):
    return evaluate(bank, X, config, with_gradient=False)[1]


def gradient(bank, X, config):
    return evaluate(bank, X, config)[2]
