"""End-to-end acceptance gate.

Each test prints one ``[criterion N] PASS/FAIL`` line (run pytest with -s to
see them) and then asserts, so a red criterion is visible in both the live
output and the test summary. Criteria 7-9 share one pinned cohort built by
the module fixture: 170 subjects, seed 42, 8 h recordings, generated and
evaluated through the CLI exactly as a user would.
"""

import itertools
import json
import os
import time

import numpy as np
import pytest

from conftest import event_tuple, make_trace, square_dip
from desatkit import (
    LabeledScore,
    SiteDegradation,
    SynthSpec,
    analyze_trace,
    bland_altman,
    compare_spo2,
    detect_desaturations,
    generate_trace,
    linear_fit,
    roc_curve,
    select_threshold,
)
from desatkit.cli import main
from oracles import best_threshold, concordance_auc, reference_detect

COHORT_N = 170
COHORT_SEED = 42


def _report(line: str, ok: bool):
    print(f"\n[{line}] {'PASS' if ok else 'FAIL'}", flush=True)


@pytest.fixture(scope="module")
def pinned_cohort(tmp_path_factory):
    """Synth + cohort runs shared by criteria 7, 8 and 9, with timings."""
    root = tmp_path_factory.mktemp("pinned")
    cohort_dir = root / "cohort"
    t0 = time.perf_counter()
    assert main(
        [
            "synth",
            "--out-dir", str(cohort_dir),
            "--n-subjects", str(COHORT_N),
            "--seed", str(COHORT_SEED),
            "--duration-h", "8",
        ]
    ) == 0
    t_synth = time.perf_counter() - t0
    manifest = str(cohort_dir / "manifest.json")

    t0 = time.perf_counter()
    assert main(["cohort", manifest, "--jobs", "1", "--out-dir", str(root / "r1")]) == 0
    t_serial = time.perf_counter() - t0

    assert main(["cohort", manifest, "--jobs", "8", "--out-dir", str(root / "r8")]) == 0

    with open(root / "r1" / "report.json") as fh:
        report = json.load(fh)
    return {
        "report": report,
        "serial_bytes": (root / "r1" / "report.json").read_bytes(),
        "parallel_bytes": (root / "r8" / "report.json").read_bytes(),
        "t_synth": t_synth,
        "t_cohort": t_serial,
    }


def test_criterion_1_count_recovery():
    """Detector recovers the scheduled event count on clean synthetic traces."""
    spec = SynthSpec(
        n_subjects=1000,
        seed=1,
        duration=7200.0,
        event_rate_range=(0.0, 18.0),
        event_duration_range=(15.0, 90.0),
        site_profiles={"fingertip": SiteDegradation()},
    )
    t0 = time.perf_counter()
    exact = 0
    odi_ok = 0
    for i in range(1, spec.n_subjects + 1):
        trace, truth = generate_trace(i, spec)
        res = analyze_trace(trace)
        if res.n_events == len(truth.dips):
            exact += 1
        if abs(res.odi - truth.true_odi) <= 0.5:
            odi_ok += 1
    elapsed = time.perf_counter() - t0
    exact_rate = exact / spec.n_subjects
    ok = exact_rate >= 0.995 and odi_ok == spec.n_subjects and elapsed < 60.0
    _report(
        f"criterion 1: exact count on {100 * exact_rate:.2f}% of 1000 traces, "
        f"all |dODI| <= 0.5/h on the rest, {elapsed:.1f} s",
        ok,
    )
    assert exact_rate >= 0.995
    assert odi_ok == spec.n_subjects
    assert elapsed < 60.0


def test_criterion_2_threshold_grid():
    """Depth/width grid around the detection thresholds matches the oracle exactly."""
    mismatches = []
    for depth, width in itertools.product(
        [round(2.5 + 0.1 * k, 1) for k in range(16)], range(3, 11)
    ):
        trace = square_dip(98.0, depth, width)
        got = [event_tuple(e) for e in detect_desaturations(trace)]
        want = reference_detect(trace.values)
        if got != want:
            mismatches.append((depth, width))
    edge_ok = (
        len(detect_desaturations(square_dip(98.0, 2.9, 8))) == 0
        and len(detect_desaturations(square_dip(98.0, 3.0, 5))) == 0
        and len(detect_desaturations(square_dip(98.0, 3.0, 6))) == 1
    )
    ok = not mismatches and edge_ok
    _report(
        f"criterion 2: 128 depth/width cells match the reference detector, "
        f"boundary cells (2.9%, 5 s, 6 s) behave as specified",
        ok,
    )
    assert mismatches == []
    assert edge_ok


def _random_score_sets(seed, n_sets, max_n):
    rng = np.random.default_rng(seed)
    produced = 0
    while produced < n_sets:
        n = int(rng.integers(2, max_n + 1))
        scores = np.round(rng.uniform(0.0, 40.0, n), 1)
        labels = rng.random(n) < rng.uniform(0.1, 0.9)
        if labels.all() or not labels.any():
            continue
        produced += 1
        yield scores, labels


def test_criterion_3_auc_exactness():
    """Trapezoidal AUC equals brute-force pairwise concordance, bit for bit."""
    checked = 0
    for values, labels in _random_score_sets(101, 500, 200):
        scores = [
            LabeledScore(str(i), float(v), bool(lab))
            for i, (v, lab) in enumerate(zip(values, labels))
        ]
        assert roc_curve(scores).auc == concordance_auc(values, labels)
        checked += 1
    _report(f"criterion 3: AUC identical to pair counting on {checked} random sets", True)


def test_criterion_4_threshold_selection():
    """Calibrated threshold matches exhaustive search, including tie cases."""
    checked = 0
    for values, labels in _random_score_sets(103, 500, 60):
        scores = [
            LabeledScore(str(i), float(v), bool(lab))
            for i, (v, lab) in enumerate(zip(values, labels))
        ]
        theta, metrics = select_threshold(scores)
        want_theta, want_j = best_threshold(values.tolist(), labels.tolist())
        assert theta == want_theta
        n_pos = int(labels.sum())
        n_neg = len(labels) - n_pos
        assert (metrics.tp / n_pos) ** 2 + (metrics.tn / n_neg) ** 2 == want_j
        checked += 1

    tie_sets = [
        ([5.0, 5.0, 5.0, 5.0], [False, True, False, True], 4.0),
        ([1.0, 2.0, 3.0, 4.0], [False, True, False, True], 1.5),
        ([1.0, 2.0, 10.0, 11.0], [False, False, True, True], 6.0),
    ]
    for values, labels, expected in tie_sets:
        scores = [
            LabeledScore(str(i), v, lab) for i, (v, lab) in enumerate(zip(values, labels))
        ]
        assert select_threshold(scores)[0] == expected
    _report(
        f"criterion 4: threshold selection matches exhaustive search on {checked} "
        f"sets and {len(tie_sets)} tie cases",
        True,
    )


def test_criterion_5_paired_agreement_stats():
    """Bland-Altman and regression reproduce hand-computed values to 1e-9."""
    a = [10.0, 12.0, 8.0, 14.0, 11.0]
    b = [9.0, 13.0, 7.0, 12.0, 10.0]
    res = bland_altman(a, b)
    sd = (1.2) ** 0.5
    t_quantile = 2.7764451051977987
    checks = [
        abs(res.bias - 0.8) <= 1e-9,
        abs(res.sd - sd) <= 1e-9,
        abs(res.loa_low - (0.8 - 1.96 * sd)) <= 1e-9,
        abs(res.loa_high - (0.8 + 1.96 * sd)) <= 1e-9,
        abs(res.bias_ci_low - (0.8 - t_quantile * sd / 5**0.5)) <= 1e-9,
        abs(res.bias_ci_high - (0.8 + t_quantile * sd / 5**0.5)) <= 1e-9,
    ]
    rev = bland_altman(b, a)
    checks += [
        abs(rev.bias + res.bias) <= 1e-12,
        abs(rev.sd - res.sd) <= 1e-12,
        abs(rev.loa_low + res.loa_high) <= 1e-12,
        abs(rev.loa_high + res.loa_low) <= 1e-12,
    ]
    fit = linear_fit([1.0, 2.0, 3.0, 4.0, 5.0], [2.0, 2.8, 4.1, 4.9, 6.2])
    checks += [
        abs(fit.slope - 1.05) <= 1e-9,
        abs(fit.intercept - 0.85) <= 1e-9,
        abs(fit.r - 10.5 / 111.0**0.5) <= 1e-9,
    ]
    ok = all(checks)
    _report("criterion 5: Bland-Altman and regression match hand values to 1e-9", ok)
    assert ok


def test_criterion_6_spo2_agreement():
    """Sample agreement: sign convention, acceptance rate, RMS decomposition."""
    ref_values = np.full(200, 96.0)
    offset = compare_spo2(make_trace(ref_values - 1.5), make_trace(ref_values))
    sign_ok = offset.bias == -1.5 and offset.a_rms == 1.5

    test_values = np.array(ref_values)
    test_values[:50] = np.nan
    acceptance = compare_spo2(make_trace(test_values), make_trace(ref_values))
    acceptance_ok = acceptance.acceptance_rate == 75.0 and acceptance.n_ref_valid == 200

    rng = np.random.default_rng(107)
    ref = np.clip(rng.normal(96.0, 1.0, 2000), 0.0, 100.0)
    test = np.clip(ref + rng.normal(-0.8, 1.1, 2000), 0.0, 100.0)
    res = compare_spo2(make_trace(test), make_trace(ref))
    d = test - ref
    decomposition = abs(res.a_rms**2 - (res.bias**2 + float(np.var(d)))) <= 1e-9
    ok = sign_ok and acceptance_ok and decomposition
    _report(
        "criterion 6: SpO2 agreement sign, acceptance and rms^2 = bias^2 + var "
        "identities hold",
        ok,
    )
    assert ok


def test_criterion_7_site_orderings(pinned_cohort):
    """Site fidelity ranking on the pinned cohort, at every severity cutoff."""
    report = pinned_cohort["report"]
    spo2 = {row["site"]: row for row in report["spo2_agreement"]}
    arm, wrist = spo2["upper_arm"], spo2["wrist"]
    spo2_ok = (
        "error" not in arm
        and "error" not in wrist
        and wrist["a_rms_pct"] > arm["a_rms_pct"]
        and wrist["acceptance_rate_pct"] < arm["acceptance_rate_pct"]
    )
    auc = {}
    for row in report["screening_matrix"]:
        assert "auc" in row, f"degenerate screening cell: {row}"
        auc[(row["cutoff"], row["site"])] = row["auc"]
    cutoffs = sorted({c for c, _ in auc})
    auc_ok = all(
        auc[(c, "fingertip")] >= auc[(c, "upper_arm")] > auc[(c, "wrist")]
        for c in cutoffs
    )
    detail = ", ".join(
        f"cutoff {c:g}: "
        f"{auc[(c, 'fingertip')]:.4f}/{auc[(c, 'upper_arm')]:.4f}/{auc[(c, 'wrist')]:.4f}"
        for c in cutoffs
    )
    ok = spo2_ok and auc_ok and cutoffs == [5.0, 15.0, 30.0]
    _report(
        f"criterion 7: a_rms {arm['a_rms_pct']:.2f} < {wrist['a_rms_pct']:.2f}, "
        f"acceptance {arm['acceptance_rate_pct']:.1f} > {wrist['acceptance_rate_pct']:.1f}, "
        f"AUC fingertip >= upper_arm > wrist at {detail}",
        ok,
    )
    assert spo2_ok
    assert auc_ok
    assert cutoffs == [5.0, 15.0, 30.0]


def test_criterion_8_parallel_determinism(pinned_cohort):
    """The parallel cohort run writes byte-identical output."""
    ok = pinned_cohort["serial_bytes"] == pinned_cohort["parallel_bytes"]
    _report("criterion 8: --jobs 8 report byte-identical to --jobs 1", ok)
    assert ok


def test_criterion_9_wall_time(pinned_cohort):
    """Generating and evaluating the pinned cohort is fast enough."""
    total = pinned_cohort["t_synth"] + pinned_cohort["t_cohort"]
    ok = total < 300.0
    _report(
        f"criterion 9: synth {pinned_cohort['t_synth']:.1f} s + cohort "
        f"{pinned_cohort['t_cohort']:.1f} s = {total:.1f} s < 300 s",
        ok,
    )
    assert ok
