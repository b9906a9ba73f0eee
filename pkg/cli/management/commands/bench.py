"""
Per-step training time over the bench grids.

bench-grid varies the number of bins (at two neuron counts and three
densities); k-grid varies the number of filters. Every fit draws from its
own substream of the seed, so results do not depend on ``--workers``.
Log-log slopes of per-step time against T (or K) are reported per group.

Usage: python convseq.py bench --preset bench-grid --max-bins 30000 --workers 4 -o bench/
"""

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from cli.base import ConvseqCommand
from filterbank.bank import DIRECT, init_bank
from optengine.training import FitConfig, fit
from synthgen.presets import build_variant, preset_variants
from synthgen.specs import SpecError

logger = logging.getLogger(__name__)

BENCH_PRESETS = ('bench-grid', 'k-grid')
DEFAULT_STEPS = 5


def loglog_slope(xs, ys):
    """Least-squares slope of log(y) against log(x); None for fewer than two points."""
    xs, ys = np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64)
    if xs.size < 2 or np.unique(xs).size < 2:
        return None
    return float(np.polyfit(np.log(xs), np.log(np.maximum(ys, 1e-12)), 1)[0])


def time_variant(preset, variant, seed, n_steps):
    dataset = build_variant(preset, variant, seed)
    X = dataset.X
    width, n_filters = variant.params['M'], variant.params['K']
    bank = init_bank(DIRECT, X.n_neurons, width, n_filters, seed)
    config = FitConfig(n_steps=n_steps, beta_xcor=10.0 if n_filters > 1 else 0.0, seed=seed,
                       log_every=0)
    start = time.perf_counter()
    result = fit(X, bank, config)
    elapsed = time.perf_counter() - start
    return {
        'label': variant.label,
        'n_neurons': X.n_neurons,
        'n_bins': X.n_bins,
        'density': variant.params.get('density'),
        'K': n_filters,
        'M': width,
        'n_spikes': X.n_spikes,
        'steps': result.steps_run,
        'seconds': elapsed,
        'seconds_per_step': elapsed / max(result.steps_run, 1),
    }


def slopes(preset, rows):
    if preset == 'k-grid':
        return {'K': loglog_slope([r['K'] for r in rows], [r['seconds_per_step'] for r in rows])}
    groups = {}
    for row in rows:
        groups.setdefault((row['n_neurons'], row['density']), []).append(row)
    return {
        f'N={n} S={s}': loglog_slope([r['n_bins'] for r in group],
                                     [r['seconds_per_step'] for r in group])
        for (n, s), group in sorted(groups.items())
    }


class Command(ConvseqCommand):
    help = 'Time training steps across the bench-grid or k-grid presets'

    config_keys = ('preset', 'only', 'n_steps', 'bench_workers', 'max_bins')
    required_keys = ('preset',)

    def add_command_arguments(self, parser):
        parser.add_argument('--preset', choices=BENCH_PRESETS, help='Grid to time')
        parser.add_argument('--variant', dest='only', action='append',
                            help='Only time the variant with this label (repeatable)')
        parser.add_argument('--steps', dest='n_steps', type=int,
                            help=f'Training steps per fit (default: {DEFAULT_STEPS})')
        parser.add_argument('--workers', dest='bench_workers', type=int,
                            help='Fits run concurrently (default: 1)')
        parser.add_argument('--max-bins', dest='max_bins', type=int,
                            help='Skip variants longer than this many bins')

    def run(self, config, report):
        preset = config['preset']
        if preset not in BENCH_PRESETS:
            raise SpecError(f'bench runs one of {BENCH_PRESETS}, got {preset!r}')
        variants = preset_variants(preset)
        only = config.get('only')
        if only:
            only = {only} if isinstance(only, str) else set(only)
            variants = [v for v in variants if v.label in only]
        if config.get('max_bins'):
            variants = [v for v in variants
                        if v.params.get('n_bins', 0) <= config['max_bins']]
        if not variants:
            raise SpecError(f'no {preset} variant left to time')

        n_steps = config.get('n_steps', DEFAULT_STEPS)
        streams = np.random.SeedSequence(config.seed).spawn(len(variants))
        seeds = [int(stream.generate_state(1)[0]) for stream in streams]
        workers = config.get('bench_workers', 1)
        logger.info('timing %d %s variants, %d steps each, %d workers',
                    len(variants), preset, n_steps, workers)

        with report.phase('bench'):
            jobs = [(preset, variant, seed, n_steps) for variant, seed in zip(variants, seeds)]
            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    rows = list(pool.map(lambda job: time_variant(*job), jobs))
            else:
                rows = [time_variant(*job) for job in jobs]

        path = config.output('bench.csv')
        with open(path, 'w', newline='', encoding='utf-8') as handle:
            writer = csv.DictWriter(handle, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        report.add_file(path)
        report.summary.update({'rows': rows, 'loglog_slopes': slopes(preset, rows)})
        for row in rows:
            self.stdout.write(f'  {row["label"]}: {row["seconds_per_step"] * 1000:.2f} ms/step')
        for group, slope in report.summary['loglog_slopes'].items():
            shown = 'n/a' if slope is None else f'{slope:.3f}'
            self.stdout.write(self.style.SUCCESS(f'slope ({group}): {shown}'))
