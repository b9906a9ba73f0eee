# synthgen/embed.py
"""
Sequence embedding over background activity.

For an occurrence centered at ``t`` with warp ``w`` the member at position
``p`` (positions reversed for reverse occurrences) fires at::

    round(t - w*span/2 + w*span*p/(n_members - 1) + jitter)

unless it is dropped. Spikes falling outside the recording are discarded and
sequence spikes landing on background spikes merge into a single 1.
"""

import logging

import numpy as np

from spikecore.exceptions import DimensionError
from spikecore.matrix import Permutation, SpikeMatrix, permute_matrix

from .specs import REVERSE, GroundTruth, Occurrence

logger = logging.getLogger(__name__)


def member_positions(n_members):
    """Fraction of the span at which each ordered member fires."""
    if n_members == 1:
        return np.array([0.5])
    return np.arange(n_members) / (n_members - 1)


def occurrence_times(spec, center, warp, direction, jitter):
    """Firing bins (before dropout and clipping) of every member, member order."""
    fractions = member_positions(spec.n_members)
    if direction == REVERSE:
        fractions = fractions[::-1]
    span = warp * spec.span
    return np.rint(center - span / 2 + span * fractions + jitter).astype(np.int64)


def embed_sequences(background, specs, seed):
    """Add every occurrence of every spec to ``background``.

    Returns the combined matrix and its ground truth; spec ``k`` becomes
    sequence type ``k``.
    """
    rng = np.random.default_rng(seed)
    n_bins = background.n_bins
    neurons, bins, occurrences = [], [], []
    for type_index, spec in enumerate(specs):
        if max(spec.member_neurons) >= background.n_neurons:
            raise DimensionError(
                f'sequence {type_index} uses neuron {max(spec.member_neurons)}, '
                f'but the background has N={background.n_neurons}'
            )
        if spec.span * max(spec.warp_factors) >= spec.isi:
            logger.warning('sequence %d: warped span %.1f >= isi %d, occurrences will overlap',
                           type_index, spec.span * max(spec.warp_factors), spec.isi)
        members = np.asarray(spec.member_neurons, dtype=np.int64)
        for i, center in enumerate(spec.centers(n_bins)):
            warp = float(rng.choice(spec.warp_factors)) if len(spec.warp_factors) > 1 \
                else spec.warp_factors[0]
            direction = spec.direction_schedule[i % len(spec.direction_schedule)]
            kept = rng.random(spec.n_members) >= spec.dropout_p
            jitter = rng.normal(0.0, spec.jitter_sd, spec.n_members) if spec.jitter_sd > 0 \
                else np.zeros(spec.n_members)
            times = occurrence_times(spec, center, warp, direction, jitter)
            inside = kept & (times >= 0) & (times < n_bins)
            neurons.append(members[inside])
            bins.append(times[inside])
            occurrences.append(Occurrence(type_index, int(center), direction, warp))

    added = SpikeMatrix.merged(background.n_neurons, n_bins,
                               np.concatenate(neurons) if neurons else [],
                               np.concatenate(bins) if bins else [])
    truth = GroundTruth(tuple(occurrences), tuple(spec.member_neurons for spec in specs))
    logger.info('embedded %d occurrences of %d sequence types (%d spikes) into %r',
                len(occurrences), len(specs), added.n_spikes, background)
    return SpikeMatrix.union(background, added), truth


def generate_background(template, seed):
    """Shuffle the rows and the columns of ``template`` independently."""
    rng = np.random.default_rng(seed)
    row_perm = Permutation.random(template.n_neurons, rng)
    col_perm = Permutation.random(template.n_bins, rng)
    return permute_matrix(template, row_perm, col_perm)
