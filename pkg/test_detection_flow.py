#!/usr/bin/env python
"""
Desk-scale detection checks for the whole pipeline.
Covers: single sequence → jitter trend → overlap → bidirectional →
extra filters → TV weight → Gaussian filters → time warp → step timing

Run with: python test_detection_flow.py
"""

import os
import time

import django
import numpy as np
from scipy.stats import spearmanr

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'convseq_project.settings')
django.setup()

from filterbank.bank import DIRECT, GAUSSIAN, init_bank  # noqa: E402
from filterbank.sorting import filter_latencies  # noqa: E402
from optengine.training import FitConfig, fit  # noqa: E402
from spikecore.matrix import bernoulli_matrix  # noqa: E402
from stathypo.null import calibrate_null  # noqa: E402
from stathypo.peaks import extract_detections  # noqa: E402
from stathypo.scoring import assign_filters, match_occurrences, score  # noqa: E402
from synthgen.embed import embed_sequences, generate_background  # noqa: E402
from synthgen.specs import FORWARD, REVERSE, SequenceSpec  # noqa: E402

SEEDS = range(5)
N_NEURONS, N_BINS, DENSITY = 150, 6000, 0.003
WIDTH, SPAN = 200, 150
N_NULL = 200


def dataset(seed, specs_for, n_neurons=N_NEURONS, n_bins=N_BINS, density=DENSITY):
    rng = np.random.default_rng(seed)
    template = bernoulli_matrix(n_neurons, n_bins, density, seed=seed)
    background = generate_background(template, seed=seed + 1000)
    members = rng.permutation(n_neurons)
    return embed_sequences(background, specs_for(members), seed=seed + 2000)


def single_sequence(jitter=10, n_members=60, isi=400):
    return lambda members: [SequenceSpec(members[:n_members], SPAN, isi, 0.2, jitter)]


def two_sequences(shared):
    def specs(members):
        first = members[:60]
        second = members[60 - shared:120 - shared]
        return [SequenceSpec(seq, SPAN, 800, 0.2, 10, offset=200 + 400 * i)
                for i, seq in enumerate((first, second))]
    return specs


def detect(X, K, seed, variant=DIRECT, width=WIDTH, beta_tv=100.0):
    bank = init_bank(variant, X.n_neurons, width, K, seed)
    config = FitConfig(n_steps=100, beta_tv=beta_tv, beta_xcor=10.0 if K > 1 else 0.0,
                       seed=seed, log_every=0)
    result = fit(X, bank, config)
    calibration = calibrate_null(X, width, variant, n_null=N_NULL, seed=seed)
    detections = [extract_detections(trace, calibration.alpha, width) for trace in result.traces]
    return result, detections


def test_single_sequence(variant=DIRECT, min_tp=1.0):
    print(f"\n[1] Single sequence, {variant} filters...")
    for seed in SEEDS:
        X, truth = dataset(seed, single_sequence())
        assert len(truth.occurrences) == 15, f"expected 15 occurrences, got {len(truth.occurrences)}"
        _, detections = detect(X, 1, seed, variant)
        report = score(detections, truth, WIDTH // 2)
        assert report.tp_rate >= min_tp, f"seed {seed}: tp_rate {report.tp_rate:.3f}"
        if variant == DIRECT:
            assert report.fp_rate == 0.0, f"seed {seed}: fp_rate {report.fp_rate:.3f}"
        print(f"✓ seed {seed}: TP {report.tp_rate:.3f} FP {report.fp_rate:.3f}")


def test_jitter_trend():
    print("\n[2] Detection against jitter...")
    means = []
    for jitter in (10, 20, 30):
        rates = []
        for seed in SEEDS:
            X, truth = dataset(seed, single_sequence(jitter))
            _, detections = detect(X, 1, seed)
            rates.append(score(detections, truth, WIDTH // 2).tp_rate)
        means.append(float(np.mean(rates)))
        print(f"✓ jitter {jitter}: mean TP {means[-1]:.3f}")
    assert all(b <= a + 1e-9 for a, b in zip(means, means[1:])), f"TP not falling: {means}"


def cross_type_hits(detections, truth, assignment, margin):
    hits = 0
    for dets, tau in zip(detections, assignment):
        bins = [t for t, _ in dets]
        for other in range(truth.n_types):
            if other != tau:
                hits += len(match_occurrences(bins, truth.centers(other), margin))
    return hits


def test_overlap():
    print("\n[3] Two sequences sharing half their neurons...")
    for seed in SEEDS:
        X, truth = dataset(seed, two_sequences(shared=30))
        _, detections = detect(X, 2, seed)
        assignment = assign_filters(detections, truth, WIDTH // 2)
        report = score(detections, truth, WIDTH // 2, assignment)
        for filter_score in report.per_filter:
            assert filter_score.tp_rate >= 0.9, f"seed {seed}: {filter_score}"
        hits = cross_type_hits(detections, truth, assignment, WIDTH // 2)
        assert hits == 0, f"seed {seed}: {hits} detections on the other sequence"
        print(f"✓ seed {seed}: assignment {assignment}, TP {report.tp_rate:.3f}")


def test_bidirectional():
    print("\n[4] Forward and reverse replay of one neuron set...")

    def specs(members):
        return [SequenceSpec(members[:60], SPAN, 800, 0.2, 10, direction_schedule=(direction,),
                             offset=200 + 400 * i)
                for i, direction in enumerate((FORWARD, REVERSE))]

    for seed in SEEDS:
        X, truth = dataset(seed, specs)
        result, detections = detect(X, 2, seed)
        assignment = assign_filters(detections, truth, WIDTH // 2)
        assert sorted(assignment) == [0, 1], f"seed {seed}: assignment {assignment}"
        report = score(detections, truth, WIDTH // 2, assignment)
        for filter_score in report.per_filter:
            assert filter_score.tp_rate >= 0.9, f"seed {seed}: {filter_score}"
        members = list(truth.members_per_type[0])
        forward, reverse = (filter_latencies(result.bank, assignment.index(tau))[members]
                            for tau in (0, 1))
        rho = spearmanr(forward, reverse).statistic
        assert rho < -0.8, f"seed {seed}: rank correlation {rho:.3f}"
        print(f"✓ seed {seed}: rank correlation {rho:.3f}")


def test_extra_filters():
    print("\n[5] Four filters, two sequences...")
    for seed in SEEDS:
        X, _ = dataset(seed, two_sequences(shared=0))
        _, detections = detect(X, 4, seed)
        active = sum(1 for dets in detections if dets)
        assert active == 2, f"seed {seed}: {active} filters reached the threshold"
        print(f"✓ seed {seed}: {active} of 4 filters significant")


def test_tv_weight():
    print("\n[6] False positives against the TV weight...")
    for seed in SEEDS:
        X, truth = dataset(seed, two_sequences(shared=30))
        counts = {}
        for beta_tv in (1.5, 100.0):
            _, detections = detect(X, 2, seed, beta_tv=beta_tv)
            assignment = assign_filters(detections, truth, WIDTH // 2)
            counts[beta_tv] = score(detections, truth, WIDTH // 2, assignment).false_positives
        assert counts[100.0] <= counts[1.5], f"seed {seed}: {counts}"
        print(f"✓ seed {seed}: FP {counts[1.5]} at 1.5, {counts[100.0]} at 100")


def test_time_warp():
    print("\n[7] Time-warped occurrences...")
    span = 60

    def warped(members):
        return [SequenceSpec(members[:60], span, 400, 0.2, 5,
                             warp_factors=(0.6, 1.0, 1.8, 2.2))]

    for seed in SEEDS:
        X, truth = dataset(seed, warped)
        _, detections = detect(X, 1, seed, width=span)
        bins = [t for t, _ in detections[0]]
        centers = [o.center for o in truth.occurrences if o.warp <= 1.0]
        found = len(match_occurrences(bins, centers, span // 2)) / len(centers)
        assert found >= 0.9, f"seed {seed}: {found:.3f} of unwarped occurrences found"
        print(f"✓ seed {seed}: {found:.3f} of occurrences with warp <= 1 found")

    def slow_and_fast(members):
        return [SequenceSpec(members[:60], span, 800, 0.2, 5, warp_factors=(warp,),
                             offset=200 + 400 * i)
                for i, warp in enumerate((1.0, 3.0))]

    for seed in SEEDS:
        X, truth = dataset(seed, slow_and_fast)
        slow = truth.centers(1)
        peaks = {}
        for width in (span, 3 * span):
            result, _ = detect(X, 1, seed, width=width)
            values = result.traces[0].values
            peaks[width] = float(np.mean([values[max(c - width, 0):c + width].max() for c in slow]))
        assert peaks[3 * span] > peaks[span], f"seed {seed}: {peaks}"
        print(f"✓ seed {seed}: mean peak {peaks[span]:.3f} narrow, {peaks[3 * span]:.3f} wide")


def seconds_per_step(n_bins, K, seed=0):
    X = bernoulli_matrix(152, n_bins, 0.0031, seed=seed)
    bank = init_bank(DIRECT, X.n_neurons, 100, K, seed)
    config = FitConfig(n_steps=5, beta_xcor=10.0 if K > 1 else 0.0, log_every=0)
    start = time.perf_counter()
    fit(X, bank, config)
    return (time.perf_counter() - start) / 5


def test_step_timing():
    print("\n[8] Per-step time against T and K...")
    sizes = (5000, 20000, 80000)
    slope_t = np.polyfit(np.log(sizes), np.log([seconds_per_step(t, 1) for t in sizes]), 1)[0]
    assert slope_t <= 1.15, f"log-log slope in T is {slope_t:.3f}"
    print(f"✓ slope in T: {slope_t:.3f}")
    ks = range(1, 7)
    slope_k = np.polyfit(np.log(ks), np.log([seconds_per_step(20000, k) for k in ks]), 1)[0]
    assert slope_k <= 1.15, f"log-log slope in K is {slope_k:.3f}"
    print(f"✓ slope in K: {slope_k:.3f}")


if __name__ == '__main__':
    print("=" * 70)
    print("CONVSEQ DESK-SCALE DETECTION CHECKS")
    print("=" * 70)
    started = time.perf_counter()
    test_single_sequence()
    test_jitter_trend()
    test_overlap()
    test_bidirectional()
    test_extra_filters()
    test_tv_weight()
    test_single_sequence(GAUSSIAN, min_tp=0.9)
    test_time_warp()
    test_step_timing()
    print("\n" + "=" * 70)
    print(f"ALL CHECKS PASSED in {time.perf_counter() - started:.1f}s")
    print("=" * 70)
