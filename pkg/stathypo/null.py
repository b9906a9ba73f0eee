# stathypo/null.py
"""
Significance threshold from random filters.

``n_null`` random single filters (drawn the way training initializes them, or
as arbitrary row-stochastic filters) are convolved with the data. All their
response values are pooled into one null distribution and the threshold is
``alpha = z * sigma0 + mu0``.

Every null filter draws from its own substream of ``seed``, and per-filter
moments are merged in filter order, so the result does not depend on the
number of worker threads.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from filterbank.bank import (DEFAULT_INIT_SCALE, DEFAULT_SIGMA, DIRECT, GAUSSIAN, init_direct,
                             init_gaussian, kernels)
from optengine.convolution import convolve_bank

from .exceptions import ScoringError

logger = logging.getLogger(__name__)

STOCHASTIC = 'stochastic'
FAMILIES = (DIRECT, GAUSSIAN, STOCHASTIC)
BATCH_CELLS = 1 << 22


@dataclass(frozen=True)
class NullCalibration:
    mu0: float
    sigma0: float
    alpha: float
    n_null: int = 1000
    z: float = 4.0
    family: str = DIRECT
    seed: int = 0

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        fields = ('mu0', 'sigma0', 'alpha', 'n_null', 'z', 'family', 'seed')
        missing = [name for name in fields[:3] if name not in data]
        if missing:
            raise ScoringError(f'calibration record lacks {", ".join(missing)}')
        return cls(**{name: data[name] for name in fields if name in data})

    def save(self, path):
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2), encoding='utf-8')
        return path

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text(encoding='utf-8'))
        except json.JSONDecodeError as exc:
            raise ScoringError(f'{path} is not a calibration record: {exc.msg}') from None
        if not isinstance(data, dict):
            raise ScoringError(f'{path} is not a calibration record')
        return cls.from_dict(data)


def threshold(mu0, sigma0, z=4.0):
    return z * sigma0 + mu0


def null_kernel(family, n_neurons, width, stream, sigma=DEFAULT_SIGMA, normalized=True,
                init_scale=DEFAULT_INIT_SCALE):
    if family == DIRECT:
        return kernels(init_direct(n_neurons, width, 1, stream, scale=init_scale))[0]
    if family == GAUSSIAN:
        return kernels(init_gaussian(n_neurons, width, 1, sigma, stream, normalized))[0]
    rows = np.random.default_rng(stream).random((n_neurons, width))
    return rows / rows.sum(axis=1, keepdims=True)


def _batch_moments(X, batch):
    traces = convolve_bank(np.stack(batch), X)
    means = traces.mean(axis=1)
    sq = ((traces - means[:, None]) ** 2).sum(axis=1)
    return list(zip(means.tolist(), sq.tolist()))


def _pool(moments, n_bins):
    """Merge per-filter (mean, sum of squared deviations) pairs in order."""
    count, mean, sq = 0, 0.0, 0.0
    for filter_mean, filter_sq in moments:
        total = count + n_bins
        delta = filter_mean - mean
        mean += delta * n_bins / total
        sq += filter_sq + delta * delta * count * n_bins / total
        count = total
    return mean, sq / count


def calibrate_null(X, width, family=DIRECT, n_null=1000, z=4.0, seed=0, sigma=DEFAULT_SIGMA,
                   normalized=True, init_scale=DEFAULT_INIT_SCALE, workers=1):
    if n_null < 2:
        raise ScoringError(f'n_null must be at least 2, got {n_null}')
    if family not in FAMILIES:
        raise ScoringError(f'unknown null family {family!r}, expected one of {FAMILIES}')
    streams = np.random.SeedSequence(seed).spawn(n_null)
    per_batch = max(1, min(64, BATCH_CELLS // max(X.n_bins, 1)))

    def run_batch(start):
        batch = [null_kernel(family, X.n_neurons, width, stream, sigma, normalized, init_scale)
                 for stream in streams[start:start + per_batch]]
        return _batch_moments(X, batch)

    starts = range(0, n_null, per_batch)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(run_batch, starts))
    else:
        batches = [run_batch(start) for start in starts]
    mu0, variance = _pool([m for batch in batches for m in batch], X.n_bins)
    sigma0 = float(np.sqrt(max(variance, 0.0)))
    calibration = NullCalibration(float(mu0), sigma0, float(threshold(mu0, sigma0, z)),
                                  int(n_null), float(z), family, int(seed))
    logger.info('null calibration over %d %s filters: mu0=%.5f sigma0=%.5f alpha=%.5f',
                n_null, family, calibration.mu0, calibration.sigma0, calibration.alpha)
    return calibration
