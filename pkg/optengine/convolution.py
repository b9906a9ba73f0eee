# optengine/convolution.py
"""
Padded 2D convolution of N x M kernels with a spike raster.

The response at bin t is::

    x_t = sum_n sum_m kernel[n, m] * X[n, t + m - M//2]

with X zero outside [0, T), i.e. a cross-correlation along time, no padding
along neurons, M//2 zeros on the left and M - 1 - M//2 on the right. Only
spikes are visited: a spike at (n, s) adds kernel[n, m] to bin s - m + M//2.
Accumulation runs in double precision with np.bincount over fixed-size spike
chunks, so results do not depend on thread scheduling.
"""

from dataclasses import dataclass

import numpy as np

from spikecore.exceptions import DimensionError

SPIKE_CHUNK = 1 << 15


@dataclass(frozen=True, eq=False)
class ResponseTrace:
    values: np.ndarray
    filter_index: int = 0

    def __len__(self):
        return int(self.values.shape[0])


def _spike_chunks(X):
    for start in range(0, X.n_spikes, SPIKE_CHUNK):
        stop = start + SPIKE_CHUNK
        yield X.neurons[start:stop], X.bins[start:stop]


def _targets(bins, width, n_bins):
    """Output bin hit by every (spike, kernel column) pair and whether it is inside."""
    targets = bins[:, None] - np.arange(width)[None, :] + width // 2
    inside = (targets >= 0) & (targets < n_bins)
    return targets, inside


def convolve_bank(kernels, X):
    """Responses of stacked kernels (K, N, M) to ``X``, shape (K, T)."""
    kernels = np.asarray(kernels, dtype=np.float64)
    if kernels.ndim != 3 or kernels.shape[1] != X.n_neurons:
        raise DimensionError(f'kernels of shape {kernels.shape} do not match N={X.n_neurons}')
    n_filters, _, width = kernels.shape
    out = np.zeros((n_filters, X.n_bins))
    for neurons, bins in _spike_chunks(X):
        targets, inside = _targets(bins, width, X.n_bins)
        flat = targets[inside]
        for k in range(n_filters):
            out[k] += np.bincount(flat, weights=kernels[k][neurons][inside], minlength=X.n_bins)
    return out


def convolve(kernel, X, filter_index=0):
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] != X.n_neurons:
        raise DimensionError(f'kernel height {kernel.shape[0] if kernel.ndim else 0} '
                             f'does not match N={X.n_neurons}')
    return ResponseTrace(convolve_bank(kernel[None], X)[0], filter_index)


def convolve_transpose(trace_grads, X, width):
    """Gradient of ``sum_k <g_k, x_k>`` with respect to every kernel, shape (K, N, M).

    Each spike at (n, s) gathers g[s - m + M//2] into kernel[n, m].
    """
    trace_grads = np.atleast_2d(np.asarray(trace_grads, dtype=np.float64))
    n_filters, n_bins = trace_grads.shape
    if n_bins != X.n_bins:
        raise DimensionError(f'trace gradients have length {n_bins}, expected T={X.n_bins}')
    # one trailing zero absorbs out-of-range targets
    padded = np.concatenate([trace_grads, np.zeros((n_filters, 1))], axis=1)
    cells = X.n_neurons * width
    out = np.zeros((n_filters, cells))
    columns = np.arange(width)
    for neurons, bins in _spike_chunks(X):
        targets, inside = _targets(bins, width, n_bins)
        targets = np.where(inside, targets, n_bins)
        cell = (neurons[:, None] * width + columns[None, :]).ravel()
        for k in range(n_filters):
            out[k] += np.bincount(cell, weights=padded[k][targets].ravel(), minlength=cells)
    return out.reshape(n_filters, X.n_neurons, width)
