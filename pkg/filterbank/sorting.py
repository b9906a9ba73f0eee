# filterbank/sorting.py
from dataclasses import dataclass

import numpy as np

from spikecore.matrix import Permutation, reorder_rows

from .bank import DIRECT, materialize


@dataclass(frozen=True, eq=False)
class SortResult:
    """Neuron order of one filter; ``order[i]`` is the neuron shown in row ``i``."""

    order: Permutation
    latencies: np.ndarray
    filter_index: int = 0


def filter_latencies(bank, k):
    """Bin of the per-row maximum (first on ties) for direct banks, the means otherwise."""
    if bank.variant == DIRECT:
        return np.argmax(materialize(bank, k), axis=1)
    return np.array(bank.params[k], dtype=np.float64)


def sort_filter(bank, k):
    latencies = filter_latencies(bank, k)
    order = Permutation(np.argsort(latencies, kind='stable'))
    return SortResult(order, latencies, k)


def sort_bank(bank):
    return [sort_filter(bank, k) for k in range(bank.n_filters)]


def sorted_rasters(X, bank):
    """``X`` with rows reordered by every filter in turn."""
    return [reorder_rows(X, result.order) for result in sort_bank(bank)]
