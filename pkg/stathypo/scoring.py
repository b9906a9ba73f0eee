# stathypo/scoring.py
"""
Occurrence-level detection scores.

A detection of filter k is a true positive when it lies within ``margin``
bins (M//2 by convention) of an unmatched occurrence of the sequence type
assigned to filter k. Detections and occurrences pair up at most once,
closest pairs first. Everything a filter reports that is not matched counts
as a false positive, whether it sits on the wrong sequence or on background.
"""

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import ScoringError


@dataclass(frozen=True)
class FilterScore:
    filter_index: int
    type_index: int
    n_occurrences: int
    matched: int
    n_detections: int
    false_positives: int
    tp_rate: float
    fn_rate: float
    fp_rate: float


@dataclass
class DetectionReport:
    detections: list
    matches: list
    per_filter: list
    assignment: list
    tp_rate: float
    fp_rate: float
    fn_rate: float
    margin: int
    n_occurrences: int = 0
    n_detections: int = 0
    false_positives: int = 0
    notes: dict = field(default_factory=dict)

    def to_dict(self):
        data = asdict(self)
        data['detections'] = [[[int(t), float(v)] for t, v in dets] for dets in self.detections]
        data['matches'] = [list(match) for match in self.matches]
        return data


def _detection_bins(detections):
    return [int(t) for t, _ in detections]


def match_occurrences(bins, centers, margin):
    """Greedy one-to-one pairing, closest first; returns (bin, center) pairs."""
    pairs = sorted((abs(t - c), t, c) for t in bins for c in centers if abs(t - c) <= margin)
    used_bins, used_centers, matched = set(), set(), []
    for _, t, c in pairs:
        if t in used_bins or c in used_centers:
            continue
        used_bins.add(t)
        used_centers.add(c)
        matched.append((t, c))
    return sorted(matched)


def assign_filters(detections, truth, margin):
    """Filter -> type assignment maximizing the total number of matches.

    Filters left over when K exceeds the number of types map to ``None``.
    """
    n_filters, n_types = len(detections), truth.n_types
    if n_filters == 0 or n_types == 0:
        return [None] * n_filters
    counts = np.zeros((n_filters, n_types), dtype=np.int64)
    for k, dets in enumerate(detections):
        bins = _detection_bins(dets)
        for tau in range(n_types):
            counts[k, tau] = len(match_occurrences(bins, truth.centers(tau), margin))
    rows, cols = linear_sum_assignment(counts, maximize=True)
    assignment = [None] * n_filters
    for k, tau in zip(rows.tolist(), cols.tolist()):
        assignment[k] = tau
    return assignment


def _rate(numerator, denominator, empty):
    return numerator / denominator if denominator else empty


def score(detections, truth, margin, assignment=None):
    """Score per-filter detections against ground truth.

    ``assignment[k]`` is the type filter k is held to; by default filter k is
    held to type k. With no occurrences to find, tp_rate is 1 (nothing was
    missed); with no detections, fp_rate is 0.
    """
    if margin < 0:
        raise ScoringError(f'margin must be non-negative, got {margin}')
    if assignment is None:
        assignment = [k if k < truth.n_types else None for k in range(len(detections))]
    if len(assignment) != len(detections):
        raise ScoringError('assignment must name one type (or None) per filter')
    assigned = [tau for tau in assignment if tau is not None]
    if len(set(assigned)) != len(assigned):
        raise ScoringError('two filters cannot be held to the same sequence type')

    per_filter, matches = [], []
    for k, (dets, tau) in enumerate(zip(detections, assignment)):
        bins = _detection_bins(dets)
        centers = truth.centers(tau) if tau is not None else []
        pairs = match_occurrences(bins, centers, margin)
        matches.extend((k, tau, t, c) for t, c in pairs)
        tp_rate = _rate(len(pairs), len(centers), 1.0)
        false_positives = len(bins) - len(pairs)
        per_filter.append(FilterScore(
            k, tau, len(centers), len(pairs), len(bins), false_positives,
            tp_rate, 1.0 - tp_rate, _rate(false_positives, len(bins), 0.0),
        ))

    n_occurrences = len(truth.occurrences)
    n_matched = len(matches)
    n_detections = sum(len(dets) for dets in detections)
    false_positives = n_detections - n_matched
    tp_rate = _rate(n_matched, n_occurrences, 1.0)
    return DetectionReport(
        detections=[list(dets) for dets in detections],
        matches=matches,
        per_filter=per_filter,
        assignment=list(assignment),
        tp_rate=tp_rate,
        fp_rate=_rate(false_positives, n_detections, 0.0),
        fn_rate=1.0 - tp_rate,
        margin=int(margin),
        n_occurrences=n_occurrences,
        n_detections=n_detections,
        false_positives=false_positives,
    )
