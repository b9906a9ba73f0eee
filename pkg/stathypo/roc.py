# stathypo/roc.py
"""
ROC curve of a single response trace against ground truth.

Positives are occurrences: an occurrence counts as found at threshold ``theta``
when some bin within ``margin`` of its center reaches ``theta``. Negatives are
the bins farther than ``margin`` from every center.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from .exceptions import ScoringError


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def to_dict(self):
        return {
            'auc': self.auc,
            'fpr': self.fpr.tolist(),
            'tpr': self.tpr.tolist(),
            'thresholds': self.thresholds.tolist(),
        }

    def write_csv(self, path):
        path = Path(path)
        with open(path, 'w', newline='', encoding='utf-8') as handle:
            writer = csv.writer(handle)
            writer.writerow(['threshold', 'fpr', 'tpr'])
            for row in zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist()):
                writer.writerow(row)
        return path


def positive_mask(n_bins, centers, margin):
    mask = np.zeros(n_bins, dtype=bool)
    for c in centers:
        mask[max(c - margin, 0):c + margin + 1] = True
    return mask


def occurrence_scores(values, centers, margin):
    """Highest trace value within ``margin`` of each center."""
    return np.array([values[max(c - margin, 0):c + margin + 1].max() for c in centers],
                    dtype=np.float64)


def roc_auc(trace, truth, margin, type_index=None):
    values = np.asarray(getattr(trace, 'values', trace), dtype=np.float64)
    centers = truth.centers(type_index)
    if not centers:
        raise ScoringError('ROC needs at least one ground-truth occurrence')
    if margin < 0:
        raise ScoringError(f'margin must be non-negative, got {margin}')
    if values.size == 0:
        raise ScoringError('ROC needs a non-empty trace')
    centers = [c for c in centers if 0 <= c < values.size]
    if not centers:
        raise ScoringError('no ground-truth occurrence falls inside the trace')

    scores = np.sort(occurrence_scores(values, centers, margin))
    negatives = np.sort(values[~positive_mask(values.size, centers, margin)])
    thresholds = np.unique(values)[::-1]

    # counts of values >= each threshold
    found = scores.size - np.searchsorted(scores, thresholds, side='left')
    false_hits = negatives.size - np.searchsorted(negatives, thresholds, side='left')
    tpr = np.concatenate([[0.0], found / scores.size])
    fpr = np.concatenate([[0.0], false_hits / max(negatives.size, 1)])
    thresholds = np.concatenate([[np.inf], thresholds])
    if fpr[-1] < 1.0 or tpr[-1] < 1.0:
        fpr = np.append(fpr, 1.0)
        tpr = np.append(tpr, 1.0)
        thresholds = np.append(thresholds, -np.inf)
    auc = float(trapezoid(tpr, fpr))
    return RocCurve(fpr, tpr, thresholds, auc)
