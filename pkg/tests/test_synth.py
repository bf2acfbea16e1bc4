import hashlib
import json
import math
import os
import pickle

import numpy as np
import pytest

from desatkit import (
    DomainError,
    SiteDegradation,
    SynthSpec,
    SynthSpecError,
    analyze_trace,
    compare_spo2,
    compute_odi,
    degrade_trace,
    detect_desaturations,
    generate_cohort,
    generate_subject,
    generate_trace,
    load_cohort,
)
from desatkit.gating import valid_duration
from desatkit.synth import DEFAULT_SITE_PROFILES

CLEAN_ONLY = {"fingertip": SiteDegradation()}


def test_generate_trace_is_deterministic():
    spec = SynthSpec(n_subjects=5, seed=21, duration=7200.0, event_rate_range=(0.0, 10.0))
    a, truth_a = generate_trace(3, spec)
    b, truth_b = generate_trace(3, spec)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.quality, b.quality)
    assert truth_a == truth_b


def test_generate_subject_is_deterministic():
    spec = SynthSpec(n_subjects=5, seed=21, duration=7200.0, event_rate_range=(0.0, 10.0))
    traces_a, _ = generate_subject(2, spec)
    traces_b, _ = generate_subject(2, spec)
    assert set(traces_a) == {"fingertip", "upper_arm", "wrist"}
    for site in traces_a:
        np.testing.assert_array_equal(traces_a[site].values, traces_b[site].values)
        np.testing.assert_array_equal(traces_a[site].quality, traces_b[site].quality)


def _dir_digest(root):
    digests = {}
    for base, _, names in os.walk(root):
        for name in names:
            path = os.path.join(base, name)
            rel = os.path.relpath(path, root)
            with open(path, "rb") as fh:
                digests[rel] = hashlib.sha256(fh.read()).hexdigest()
    return digests


def test_generate_cohort_is_byte_identical(tmp_path):
    spec = SynthSpec(n_subjects=3, seed=9, duration=7200.0, event_rate_range=(0.0, 10.0))
    generate_cohort(spec, tmp_path / "a")
    generate_cohort(spec, tmp_path / "b")
    da = _dir_digest(tmp_path / "a")
    db = _dir_digest(tmp_path / "b")
    assert da == db
    assert len(da) == 3 * 3 + 2  # one CSV per subject and site, plus two JSON files


def test_schedule_respects_spacing_and_margins():
    spec = SynthSpec(
        n_subjects=1, seed=3, duration=28800.0, event_rate_range=(20.0, 20.0),
        site_profiles=CLEAN_ONLY,
    )
    _, truth = generate_trace(1, spec)
    dips = truth.dips
    assert len(dips) == 160  # 20 events/h for 8 h
    assert truth.true_odi == 20.0
    assert dips[0].onset_s >= 60.0 - 1e-9
    last = dips[-1]
    assert last.onset_s + last.span_s <= spec.duration - 60.0 + 1e-9
    for cur, nxt in zip(dips, dips[1:]):
        assert nxt.onset_s >= cur.onset_s + cur.span_s + 60.0 - 1e-9
    for dip in dips:
        assert 4.0 <= dip.depth <= 10.0
        assert 15.0 <= dip.hold_s <= 45.0
        assert dip.span_s == 10.0 + dip.hold_s + 15.0


def test_infeasible_schedule_is_rejected():
    spec = SynthSpec(
        n_subjects=1, seed=1, duration=3600.0, event_rate_range=(60.0, 60.0),
        event_duration_range=(15.0, 15.0), site_profiles=CLEAN_ONLY,
    )
    with pytest.raises(SynthSpecError):
        generate_trace(1, spec)


def test_quiet_noiseless_trace_is_flat():
    spec = SynthSpec(
        n_subjects=1, seed=2, duration=3600.0, noise_sd=0.0,
        event_rate_range=(0.0, 0.0), site_profiles=CLEAN_ONLY,
    )
    trace, truth = generate_trace(1, spec)
    assert truth.dips == ()
    assert truth.true_odi == 0.0
    assert np.all(trace.values == 97.0)
    assert np.all(trace.quality == 1.0)


def test_single_event_anatomy():
    spec = SynthSpec(
        n_subjects=1, seed=5, duration=28800.0, noise_sd=0.0,
        event_rate_range=(0.125, 0.125), depth_range=(5.0, 5.0),
        event_duration_range=(20.0, 20.0), site_profiles=CLEAN_ONLY,
    )
    trace, truth = generate_trace(1, spec)
    assert len(truth.dips) == 1
    assert truth.true_odi == 0.125
    assert trace.values.min() == 92.0  # full depth reached during the hold
    assert trace.values[0] == 97.0 and trace.values[-1] == 97.0
    # only the 45 s dip span (10 descent + 20 hold + 15 recovery) sits below baseline
    assert np.count_nonzero(trace.values < 97.0) <= 46
    events = detect_desaturations(trace)
    assert len(events) == 1
    assert compute_odi(events, valid_duration(trace)) == 0.125


def test_true_odi_matches_dip_count():
    spec = SynthSpec(n_subjects=8, seed=7, duration=7200.0,
                     event_rate_range=(0.0, 10.0), site_profiles=CLEAN_ONLY)
    for i in range(1, 9):
        _, truth = generate_trace(i, spec)
        assert truth.true_odi == len(truth.dips) / (spec.duration / 3600.0)


def test_reference_index_is_floored_at_zero():
    spec = SynthSpec(n_subjects=30, seed=11, duration=7200.0,
                     event_rate_range=(0.0, 5.0), ahi_jitter_sd=50.0,
                     site_profiles=CLEAN_ONLY)
    ahis = [generate_trace(i, spec)[1].ahi_ref for i in range(1, 31)]
    assert all(a >= 0.0 for a in ahis)
    assert any(a == 0.0 for a in ahis)  # the jitter drives some below zero


def test_detected_index_recovers_truth_on_clean_traces():
    spec = SynthSpec(n_subjects=25, seed=13, duration=14400.0,
                     event_rate_range=(0.0, 20.0), site_profiles=CLEAN_ONLY)
    for i in range(1, 26):
        trace, truth = generate_trace(i, spec)
        res = analyze_trace(trace)
        assert res.n_events == len(truth.dips)
        assert abs(res.odi - truth.true_odi) / max(truth.true_odi, 1.0) <= 0.02


def test_degrade_clean_profile_is_identity():
    spec = SynthSpec(n_subjects=1, seed=2, duration=3600.0, site_profiles=CLEAN_ONLY)
    trace, _ = generate_trace(1, spec)
    out = degrade_trace(trace, SiteDegradation(), np.random.default_rng(0))
    assert out is trace


def test_degrade_bias_only_shifts_values():
    spec = SynthSpec(n_subjects=1, seed=4, duration=3600.0,
                     event_rate_range=(0.0, 5.0), site_profiles=CLEAN_ONLY)
    trace, _ = generate_trace(1, spec)
    out = degrade_trace(trace, SiteDegradation(bias=0.4), np.random.default_rng(1))
    np.testing.assert_allclose(out.values, np.round(trace.values + 0.4, 4), atol=1e-12)
    assert np.all(out.quality == 1.0)
    agreement = compare_spo2(out, trace)
    assert agreement.acceptance_rate == 100.0
    assert agreement.bias == pytest.approx(0.4, abs=1e-4)


def test_degrade_artifacts_form_long_zero_runs():
    spec = SynthSpec(n_subjects=1, seed=6, duration=28800.0,
                     event_rate_range=(0.0, 5.0), site_profiles=CLEAN_ONLY)
    trace, _ = generate_trace(1, spec)
    out = degrade_trace(
        trace, DEFAULT_SITE_PROFILES["wrist"], np.random.default_rng([6, 1, 2])
    )
    q = out.quality
    assert set(np.unique(q)) <= {0.0, 1.0}
    zero_fraction = float(np.mean(q == 0.0))
    assert zero_fraction <= 0.95 + 1e-9
    # artifact runs are drawn at 30 s or longer, and merging only lengthens them
    padded = np.concatenate(([1.0], q, [1.0]))
    edges = np.flatnonzero(np.diff((padded == 0.0).astype(int)))
    runs = edges[1::2] - edges[0::2]
    if len(runs):
        assert runs.min() >= 30


def test_cohort_on_disk_round_trips(tmp_path):
    spec = SynthSpec(n_subjects=10, seed=15, duration=3600.0, event_rate_range=(0.0, 8.0))
    paths = generate_cohort(spec, tmp_path)
    assert sorted(os.listdir(tmp_path)) == ["ground_truth.json", "manifest.json", "traces"]
    assert len(os.listdir(tmp_path / "traces")) == 30

    with open(paths.ground_truth) as fh:
        truth_doc = json.load(fh)
    assert truth_doc["seed"] == 15
    assert truth_doc["n_subjects"] == 10
    assert len(truth_doc["subjects"]) == 10
    for row in truth_doc["subjects"]:
        assert row["n_events"] == len(row["events"])
        assert row["true_odi"] == row["n_events"]  # one-hour recordings
        assert row["severity"] in {"normal", "mild", "moderate", "severe"}

    load = load_cohort(paths.manifest)
    assert load.failures == ()
    assert len(load.records) == 10
    by_id = {row["id"]: row for row in truth_doc["subjects"]}
    for rec in load.records:
        assert set(rec.traces) == {"fingertip", "upper_arm", "wrist"}
        assert rec.ahi_ref == by_id[rec.subject_id]["ahi_ref"]
        assert len(rec.traces["fingertip"]) == 3600
        assert rec.meta is not None
        assert 25 <= rec.meta["age"] <= 80
        assert rec.meta["sex"] in {"m", "f"}
        assert 16.0 <= rec.meta["bmi"] <= 55.0


def test_spec_pickle_round_trip():
    spec = SynthSpec(n_subjects=4, seed=8)
    back = pickle.loads(pickle.dumps(spec))
    assert back.n_subjects == 4 and back.seed == 8
    assert dict(back.site_profiles) == dict(spec.site_profiles)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_subjects": 0},
        {"duration": 0.0},
        {"sample_period": 0.0},
        {"baseline_spo2": 101.0},
        {"noise_sd": -0.1},
        {"event_rate_range": (5.0, 1.0)},
        {"event_rate_range": (-1.0, 5.0)},
        {"depth_range": (4.0, math.inf)},
        {"ahi_jitter_sd": -1.0},
        {"site_profiles": {"earlobe": SiteDegradation()}},
        {"site_profiles": {}},
    ],
)
def test_spec_rejects_bad_values(kwargs):
    with pytest.raises(DomainError):
        SynthSpec(**kwargs)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"bias": math.nan},
        {"extra_noise_sd": -0.1},
        {"artifact_fraction": 1.0},
        {"artifact_fraction": -0.1},
        {"spurious_rate": -1.0},
    ],
)
def test_degradation_rejects_bad_values(kwargs):
    with pytest.raises(DomainError):
        SiteDegradation(**kwargs)
