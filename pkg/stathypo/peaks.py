# stathypo/peaks.py
import numpy as np

from .exceptions import ScoringError


def local_maxima(values):
    """Bins not smaller than either neighbour."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return np.empty(0, dtype=np.int64)
    left = np.concatenate([[-np.inf], values[:-1]])
    right = np.concatenate([values[1:], [-np.inf]])
    return np.flatnonzero((values >= left) & (values >= right))


def extract_detections(trace, alpha, suppress_window):
    """Significant peaks of ``trace`` as (bin, value) pairs sorted by bin.

    Local maxima at or above ``alpha`` that rise above the trace minimum are
    accepted highest first; a candidate closer than ``suppress_window`` bins
    to an accepted peak is dropped.
    """
    if suppress_window < 1:
        raise ScoringError(f'suppress_window must be at least 1, got {suppress_window}')
    values = np.asarray(getattr(trace, 'values', trace), dtype=np.float64)
    if values.size == 0:
        return []
    candidates = local_maxima(values)
    # a maximum lying on the trace floor (anywhere on a flat trace) is not a peak
    candidates = candidates[(values[candidates] >= alpha) & (values[candidates] > values.min())]
    # highest first, earlier bin first among equals
    candidates = candidates[np.lexsort((candidates, -values[candidates]))]
    blocked = np.zeros(values.shape[0], dtype=bool)
    accepted = []
    reach = int(suppress_window) - 1
    for t in candidates:
        if blocked[t]:
            continue
        accepted.append(int(t))
        blocked[max(t - reach, 0):t + reach + 1] = True
    return [(t, float(values[t])) for t in sorted(accepted)]


def count_detections(traces, alpha, suppress_window):
    return sum(len(extract_detections(trace, alpha, suppress_window)) for trace in traces)
