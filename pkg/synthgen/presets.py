# synthgen/presets.py
"""
Named dataset recipes.

Every preset expands into one or more variants. A variant is built from a
background (the supplied template, or a Bernoulli raster, shuffled by rows
and columns) plus embedded sequences, and carries the filter width and
filter count it is meant to be fitted with.

Values marked ``# assumed`` are not fixed by the method description: the
base span of sequences, the place-cell noise and the dropout and length
levels of the detection grid.
"""

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from spikecore.matrix import bernoulli_matrix

from .embed import embed_sequences, generate_background
from .placecells import generate_place_cell_dataset
from .specs import FORWARD, REVERSE, PlaceCellSpec, SequenceSpec, SpecError

logger = logging.getLogger(__name__)

N_NEURONS = 452
N_BINS = 18137
BACKGROUND_DENSITY = 0.003
SPAN = 150  # assumed
SHORT_SPAN = 80  # assumed, must stay below isi=200

SINGLE_SEQ = {'n_members': 80, 'dropout_p': 0.2, 'isi': (400, 600, 800), 'jitter_sd': (10, 20, 30)}
OVERLAP = {'n_members': 100, 'shared': 50, 'dropout_p': 0.2, 'jitter_sd': 10, 'isi': 824}
TIMEWARP = {'n_members': 80, 'n_types': 3, 'dropout_p': 0.2, 'jitter_sd': 10, 'isi': 1200,
            'warp_factors': (0.6, 1.0, 1.8, 2.2)}
MULTISCALE = {'n_members': 160, 'dropout_p': 0.2, 'jitter_sd': 15, 'isi': 1600, 'slowdown': 3.0}
BENCH_GRID = {
    'n_neurons': (76, 152),
    'n_bins': (4441, 8882, 13323, 17764, 22205, 26646, 100000, 500000),
    'density': (0.0015, 0.0031, 0.0038),
    'n_members': 40, 'dropout_p': 0.2, 'isi': 200, 'jitter_sd': 10,
}
K_GRID = {'n_types': (1, 2, 3, 4, 5, 6), 'n_members': 40, 'dropout_p': 0.2, 'isi': 200,
          'jitter_sd': 10}
DETECTION_GRID = {
    'dropout_p': (0.2, 0.5, 0.8),  # assumed
    'isi': (400, 600, 800),
    'n_members': (40, 60, 80),  # assumed
    'jitter_sd': (10, 20, 30),
}


@dataclass
class Dataset:
    label: str
    X: object
    truth: object
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Variant:
    label: str
    params: dict


def _variant_label(preset, **params):
    return '_'.join([preset] + [f'{key}{value}' for key, value in params.items()])


def _single_seq_variants():
    for isi, jitter in itertools.product(SINGLE_SEQ['isi'], SINGLE_SEQ['jitter_sd']):
        yield Variant(_variant_label('single-seq', isi=isi, jitter=jitter),
                      {'isi': isi, 'jitter_sd': jitter, 'M': 200, 'K': 1})


def _bench_grid_variants():
    for n, t, s in itertools.product(BENCH_GRID['n_neurons'], BENCH_GRID['n_bins'],
                                      BENCH_GRID['density']):
        yield Variant(_variant_label('bench-grid', N=n, T=t, S=s),
                      {'n_neurons': n, 'n_bins': t, 'density': s, 'M': 100, 'K': 1})


def _k_grid_variants():
    for k in K_GRID['n_types']:
        yield Variant(_variant_label('k-grid', K=k), {'n_types': k, 'M': 100, 'K': k})


def _detection_grid_variants():
    keys = ('dropout_p', 'isi', 'n_members', 'jitter_sd')
    for values in itertools.product(*(DETECTION_GRID[key] for key in keys)):
        params = dict(zip(keys, values))
        yield Variant(_variant_label('detection-grid', p=params['dropout_p'], isi=params['isi'],
                                     n=params['n_members'], jitter=params['jitter_sd']),
                      {**params, 'M': 200, 'K': 1})


PRESET_VARIANTS = {
    'single-seq': _single_seq_variants,
    'overlap-2seq': lambda: [Variant('overlap-2seq', {'M': 200, 'K': 2})],
    'bidirectional': lambda: [Variant('bidirectional', {'M': 200, 'K': 2})],
    'timewarp': lambda: [Variant('timewarp', {'M': 200, 'K': 3})],
    'multiscale': lambda: [Variant('multiscale', {'M': 200, 'K': 1, 'wide_M': 600})],
    'tmaze': lambda: [Variant('tmaze', {'M': 200, 'K': 2})],
    'bench-grid': _bench_grid_variants,
    'k-grid': _k_grid_variants,
    'detection-grid': _detection_grid_variants,
}

PRESETS = tuple(PRESET_VARIANTS)


def preset_variants(name):
    if name not in PRESET_VARIANTS:
        raise SpecError(f'unknown preset {name!r}, expected one of {PRESETS}')
    return list(PRESET_VARIANTS[name]())


def _background(template, n_neurons, n_bins, density, seeds):
    if template is None:
        template = bernoulli_matrix(n_neurons, n_bins, density, seed=seeds[0])
    return generate_background(template, seed=seeds[1])


def _disjoint_members(rng, n_neurons, sizes):
    chosen = rng.choice(n_neurons, size=sum(sizes), replace=False)
    bounds = np.cumsum([0] + list(sizes))
    return [tuple(chosen[a:b].tolist()) for a, b in zip(bounds[:-1], bounds[1:])]


def _specs_for(name, params, n_neurons, rng):
    if name in ('single-seq', 'detection-grid'):
        n_members = params.get('n_members', SINGLE_SEQ['n_members'])
        members, = _disjoint_members(rng, n_neurons, [n_members])
        dropout = params.get('dropout_p', SINGLE_SEQ['dropout_p'])
        return [SequenceSpec(members, SPAN, params['isi'], dropout, params['jitter_sd'])]
    if name == 'overlap-2seq':
        n, shared = OVERLAP['n_members'], OVERLAP['shared']
        pool, = _disjoint_members(rng, n_neurons, [2 * n - shared])
        first, second = pool[:n], pool[n - shared:]
        return [SequenceSpec(members, SPAN, OVERLAP['isi'], OVERLAP['dropout_p'],
                             OVERLAP['jitter_sd'], offset=OVERLAP['isi'] // 4 * (1 + 2 * i))
                for i, members in enumerate((first, second))]
    if name == 'bidirectional':
        members, = _disjoint_members(rng, n_neurons, [OVERLAP['n_members']])
        return [SequenceSpec(members, SPAN, OVERLAP['isi'], OVERLAP['dropout_p'],
                             OVERLAP['jitter_sd'], direction_schedule=(direction,),
                             offset=OVERLAP['isi'] // 4 * (1 + 2 * i))
                for i, direction in enumerate((FORWARD, REVERSE))]
    if name == 'timewarp':
        n_types, isi = TIMEWARP['n_types'], TIMEWARP['isi']
        groups = _disjoint_members(rng, n_neurons, [TIMEWARP['n_members']] * n_types)
        return [SequenceSpec(members, SPAN, isi, TIMEWARP['dropout_p'], TIMEWARP['jitter_sd'],
                             warp_factors=TIMEWARP['warp_factors'] if i == 0 else (1.0,),
                             offset=isi // (2 * n_types) * (1 + 2 * i))
                for i, members in enumerate(groups)]
    if name == 'multiscale':
        members, = _disjoint_members(rng, n_neurons, [MULTISCALE['n_members']])
        isi = MULTISCALE['isi']
        return [SequenceSpec(members, SPAN, isi, MULTISCALE['dropout_p'], MULTISCALE['jitter_sd'],
                             warp_factors=(warp,), offset=isi // 4 * (1 + 2 * i))
                for i, warp in enumerate((1.0, MULTISCALE['slowdown']))]
    if name == 'bench-grid':
        members, = _disjoint_members(rng, n_neurons, [BENCH_GRID['n_members']])
        return [SequenceSpec(members, SHORT_SPAN, BENCH_GRID['isi'], BENCH_GRID['dropout_p'],
                             BENCH_GRID['jitter_sd'])]
    if name == 'k-grid':
        k = params['n_types']
        isi = K_GRID['isi'] * k
        groups = _disjoint_members(rng, n_neurons, [K_GRID['n_members']] * k)
        return [SequenceSpec(members, SHORT_SPAN, isi, K_GRID['dropout_p'], K_GRID['jitter_sd'],
                             offset=K_GRID['isi'] // 2 + K_GRID['isi'] * i)
                for i, members in enumerate(groups)]
    raise SpecError(f'preset {name!r} has no sequence recipe')


def build_variant(name, variant, seed, template=None, placecell_spec=None):
    seeds = np.random.SeedSequence(seed).generate_state(4).tolist()
    params = dict(variant.params)
    if name == 'tmaze':
        X, truth = generate_place_cell_dataset(placecell_spec or PlaceCellSpec(), seeds[3])
        return Dataset(variant.label, X, truth, params)
    n_neurons = params.get('n_neurons', N_NEURONS)
    n_bins = params.get('n_bins', N_BINS)
    density = params.get('density', BACKGROUND_DENSITY)
    background = _background(template, n_neurons, n_bins, density, seeds)
    rng = np.random.default_rng(seeds[2])
    specs = _specs_for(name, params, background.n_neurons, rng)
    X, truth = embed_sequences(background, specs, seed=seeds[3])
    return Dataset(variant.label, X, truth, params)


def iter_preset(name, seed, template=None, only=None, placecell_spec=None):
    """Build the preset's variants in order; ``only`` filters by label."""
    variants = preset_variants(name)
    if only:
        variants = [v for v in variants if v.label in set(only)]
        if not variants:
            raise SpecError(f'preset {name!r} has no variant named {only}')
    for index, variant in enumerate(variants):
        logger.info('building %s (%d/%d)', variant.label, index + 1, len(variants))
        yield build_variant(name, variant, seed, template, placecell_spec)
