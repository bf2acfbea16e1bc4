"""Synthetic cohort generation with known ground truth.

Each subject gets a clean SpO2 signal: a flat baseline with Gaussian noise,
interrupted by scheduled desaturation dips. A dip is trapezoidal: a 10 s
descent, a hold at the nadir, and a 15 s recovery. Dips never overlap and
keep at least 60 s spacing plus 60 s margins at both ends of the recording.

Per sensor site, the clean signal is degraded by a constant bias, extra
Gaussian noise, spurious motion dips (trapezoids the quality index does not
flag, so they survive gating and corrupt the event count), and contiguous
artifact runs whose quality index is 0 (the quality gate removes them
downstream). Artifact coverage and spurious-dip rate are scaled by one
per-subject motion severity factor, uniform on [0, 2]: restless sleepers
lose more samples to artifacts and pick up more false dips at once. The
fingertip profile defaults to no degradation, so it doubles as the
reference channel.

All randomness is keyed: subject streams are seeded (seed, subject_index)
and site streams (seed, subject_index, site_index), so any subject or site
can be regenerated independently and cohorts are reproducible bit for bit.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .core import SITES, SampledTrace, severity_class
from .errors import DomainError, SynthSpecError
from .ingest import write_trace_csv

DESCENT_S = 10.0

RECOVERY_S = 15.0

MIN_SPACING_S = 60.0

EDGE_MARGIN_S = 60.0

VALUE_DECIMALS = 4

ARTIFACT_RUN_RANGE_S = (30.0, 300.0)

SPURIOUS_DEPTH_RANGE = (3.0, 6.0)

SPURIOUS_HOLD_RANGE_S = (10.0, 40.0)


@dataclass(frozen=True)
class SiteDegradation:
    """How one sensor site corrupts the clean signal.

    Attributes:
        bias: constant offset added to every sample, percent.
        extra_noise_sd: standard deviation of additional Gaussian noise.
        artifact_fraction: target fraction of samples covered by artifact
            runs (contiguous stretches with quality 0), before the
            per-subject motion severity factor is applied.
        spurious_rate: mean rate of motion-induced dips, events/hour. These
            look like real desaturations but keep quality 1, so they pass
            the gate and inflate the detected event count. Also scaled by
            the per-subject motion severity factor.
    """

    bias: float = 0.0
    extra_noise_sd: float = 0.0
    artifact_fraction: float = 0.0
    spurious_rate: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.bias):
            raise DomainError(f"bias must be finite, got {self.bias!r}")
        if not (math.isfinite(self.extra_noise_sd) and self.extra_noise_sd >= 0):
            raise DomainError(f"extra_noise_sd must be >= 0, got {self.extra_noise_sd!r}")
        if not (0.0 <= self.artifact_fraction < 1.0):
            raise DomainError(
                f"artifact_fraction must lie in [0, 1), got {self.artifact_fraction!r}"
            )
        if not (math.isfinite(self.spurious_rate) and self.spurious_rate >= 0):
            raise DomainError(f"spurious_rate must be >= 0, got {self.spurious_rate!r}")

    @property
    def is_clean(self) -> bool:
        return (
            self.bias == 0.0
            and self.extra_noise_sd == 0.0
            and self.artifact_fraction == 0.0
            and self.spurious_rate == 0.0
        )


DEFAULT_SITE_PROFILES: Mapping[str, SiteDegradation] = MappingProxyType(
    {
        "fingertip": SiteDegradation(),
        "upper_arm": SiteDegradation(
            bias=0.4, extra_noise_sd=0.18, artifact_fraction=0.04, spurious_rate=3.0
        ),
        "wrist": SiteDegradation(
            bias=-0.9, extra_noise_sd=0.42, artifact_fraction=0.30, spurious_rate=10.0
        ),
    }
)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic cohort.

    Attributes:
        n_subjects: cohort size.
        seed: root seed; all streams derive from it.
        duration: recording length per subject, seconds.
        sample_period: grid spacing, seconds.
        baseline_spo2: resting saturation level, percent.
        noise_sd: Gaussian noise on the clean signal.
        event_rate_range: per-subject true event rate drawn uniformly from
            this range, events/h.
        depth_range: dip depth drawn uniformly per event, percent.
        event_duration_range: nadir hold time drawn uniformly per event,
            seconds (full dip span adds the fixed descent and recovery).
        ahi_jitter_sd: sd of the noise linking the reference index to the
            true event rate.
        site_profiles: degradation per site; every listed site gets a trace.
    """

    n_subjects: int = 20
    seed: int = 0
    duration: float = 28800.0
    sample_period: float = 1.0
    baseline_spo2: float = 97.0
    noise_sd: float = 0.3
    event_rate_range: tuple[float, float] = (0.0, 30.0)
    depth_range: tuple[float, float] = (4.0, 10.0)
    event_duration_range: tuple[float, float] = (15.0, 45.0)
    ahi_jitter_sd: float = 5.0
    site_profiles: Mapping[str, SiteDegradation] = DEFAULT_SITE_PROFILES

    def __post_init__(self):
        if self.n_subjects < 1:
            raise DomainError(f"n_subjects must be >= 1, got {self.n_subjects!r}")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise DomainError(f"duration must be > 0, got {self.duration!r}")
        if not (math.isfinite(self.sample_period) and self.sample_period > 0):
            raise DomainError(f"sample_period must be > 0, got {self.sample_period!r}")
        if not 0.0 <= self.baseline_spo2 <= 100.0:
            raise DomainError(f"baseline_spo2 must lie in [0, 100], got {self.baseline_spo2!r}")
        if not (math.isfinite(self.noise_sd) and self.noise_sd >= 0):
            raise DomainError(f"noise_sd must be >= 0, got {self.noise_sd!r}")
        for name in ("event_rate_range", "depth_range", "event_duration_range"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and 0 <= lo <= hi):
                raise DomainError(f"{name} must satisfy 0 <= lo <= hi, got ({lo!r}, {hi!r})")
        if not (math.isfinite(self.ahi_jitter_sd) and self.ahi_jitter_sd >= 0):
            raise DomainError(f"ahi_jitter_sd must be >= 0, got {self.ahi_jitter_sd!r}")
        unknown = set(self.site_profiles) - set(SITES)
        if unknown:
            raise DomainError(f"unknown sites in site_profiles: {sorted(unknown)}")
        if not self.site_profiles:
            raise DomainError("site_profiles must list at least one site")
        object.__setattr__(
            self, "site_profiles", MappingProxyType(dict(self.site_profiles))
        )

    def __getstate__(self):
        state = self.__dict__.copy()
        state["site_profiles"] = dict(self.site_profiles)
        return state

    def __setstate__(self, state):
        for k, v in state.items():
            object.__setattr__(self, k, v)
        object.__setattr__(self, "site_profiles", MappingProxyType(dict(state["site_profiles"])))


@dataclass(frozen=True)
class ScheduledDip:
    """One planned desaturation: onset time, depth, and nadir hold time."""

    onset_s: float
    depth: float
    hold_s: float

    @property
    def span_s(self) -> float:
        return DESCENT_S + self.hold_s + RECOVERY_S


@dataclass(frozen=True)
class SubjectTruth:
    """Ground truth for one synthetic subject."""

    subject_id: str
    true_odi: float
    ahi_ref: float
    severity: str
    dips: tuple[ScheduledDip, ...] = field(default=())


def _schedule_dips(rng: np.random.Generator, spec: SynthSpec) -> tuple[ScheduledDip, ...]:
    """Draw a non-overlapping dip schedule, or fail if it cannot fit."""
    rate = rng.uniform(*spec.event_rate_range)
    n_events = int(round(rate * spec.duration / 3600.0))
    depths = rng.uniform(*spec.depth_range, n_events)
    holds = rng.uniform(*spec.event_duration_range, n_events)
    if n_events == 0:
        return ()
    spans = DESCENT_S + holds + RECOVERY_S
    need = 2 * EDGE_MARGIN_S + float(spans.sum()) + MIN_SPACING_S * (n_events - 1)
    slack = spec.duration - need
    if slack < 0:
        raise SynthSpecError(
            f"cannot place {n_events} events of total span {spans.sum():.0f} s "
            f"in {spec.duration:.0f} s with margins and spacing"
        )
    weights = rng.random(n_events + 1)
    gaps = weights / weights.sum() * slack
    onsets = (
        EDGE_MARGIN_S
        + np.cumsum(gaps[:-1])
        + np.concatenate(([0.0], np.cumsum(spans[:-1] + MIN_SPACING_S)))
    )
    return tuple(
        ScheduledDip(float(t), float(d), float(h))
        for t, d, h in zip(onsets, depths, holds)
    )


def _subtract_dip(values: np.ndarray, onset_s: float, depth: float, hold_s: float, period: float):
    """Subtract one trapezoidal dip from the signal, in place."""
    n = len(values)
    knots_t = (
        onset_s,
        onset_s + DESCENT_S,
        onset_s + DESCENT_S + hold_s,
        onset_s + DESCENT_S + hold_s + RECOVERY_S,
    )
    lo = max(0, int(math.ceil(knots_t[0] / period)))
    hi = min(n, int(math.floor(knots_t[3] / period)) + 1)
    if lo >= hi:
        return
    seg_t = np.arange(lo, hi) * period
    values[lo:hi] -= np.interp(seg_t, knots_t, (0.0, depth, depth, 0.0))


def _clean_signal(rng: np.random.Generator, spec: SynthSpec, dips) -> np.ndarray:
    n = int(round(spec.duration / spec.sample_period))
    values = np.full(n, spec.baseline_spo2)
    for dip in dips:
        _subtract_dip(values, dip.onset_s, dip.depth, dip.hold_s, spec.sample_period)
    if spec.noise_sd > 0:
        values = values + rng.normal(0.0, spec.noise_sd, n)
    return np.round(np.clip(values, 0.0, 100.0), VALUE_DECIMALS)


def _apply_artifacts(rng: np.random.Generator, quality: np.ndarray, fraction: float, period: float):
    """Zero out contiguous quality runs until the target fraction is covered."""
    n = len(quality)
    target = int(round(fraction * n))
    if target <= 0:
        return
    lo = max(1, int(round(ARTIFACT_RUN_RANGE_S[0] / period)))
    hi = max(lo, int(round(ARTIFACT_RUN_RANGE_S[1] / period)))
    covered = 0
    attempts = 0
    max_attempts = 20 + 10 * (target // lo + 1)
    while covered < target and attempts < max_attempts:
        attempts += 1
        length = int(rng.integers(lo, hi + 1))
        start = int(rng.integers(0, max(n - length, 0) + 1))
        quality[start : start + length] = 0.0
        covered = int(np.count_nonzero(quality == 0.0))


def generate_trace(subject_index: int, spec: SynthSpec) -> tuple[SampledTrace, SubjectTruth]:
    """Generate one subject's clean trace and its ground truth.

    Deterministic in (spec.seed, subject_index).
    """
    rng = np.random.default_rng([spec.seed, subject_index])
    dips = _schedule_dips(rng, spec)
    values = _clean_signal(rng, spec, dips)
    true_odi = len(dips) / (spec.duration / 3600.0)
    ahi_ref = max(0.0, true_odi + float(rng.normal(0.0, spec.ahi_jitter_sd)))
    truth = SubjectTruth(
        subject_id=f"S{subject_index:03d}",
        true_odi=true_odi,
        ahi_ref=ahi_ref,
        severity=severity_class(ahi_ref).label,
        dips=dips,
    )
    trace = SampledTrace(
        values,
        start_epoch=0.0,
        sample_period=spec.sample_period,
        quality=np.ones(len(values)),
    )
    return trace, truth


def degrade_trace(
    trace: SampledTrace, profile: SiteDegradation, rng: np.random.Generator
) -> SampledTrace:
    """Apply one site's degradation profile to a clean trace."""
    if profile.is_clean:
        return trace
    severity = 1.0
    if profile.spurious_rate > 0 or profile.artifact_fraction > 0:
        severity = float(rng.uniform(0.0, 2.0))
    values = trace.values + profile.bias
    if profile.extra_noise_sd > 0:
        values = values + rng.normal(0.0, profile.extra_noise_sd, len(values))
    if profile.spurious_rate > 0:
        duration = len(values) * trace.sample_period
        span_max = DESCENT_S + SPURIOUS_HOLD_RANGE_S[1] + RECOVERY_S
        n_spurious = int(rng.poisson(severity * profile.spurious_rate * duration / 3600.0))
        for _ in range(n_spurious):
            onset = float(rng.uniform(0.0, max(duration - span_max, 0.0)))
            depth = float(rng.uniform(*SPURIOUS_DEPTH_RANGE))
            hold = float(rng.uniform(*SPURIOUS_HOLD_RANGE_S))
            _subtract_dip(values, onset, depth, hold, trace.sample_period)
    values = np.round(np.clip(values, 0.0, 100.0), VALUE_DECIMALS)
    quality = np.ones(len(values))
    if profile.artifact_fraction > 0:
        fraction = min(0.95, severity * profile.artifact_fraction)
        _apply_artifacts(rng, quality, fraction, trace.sample_period)
    return SampledTrace(
        values,
        start_epoch=trace.start_epoch,
        sample_period=trace.sample_period,
        quality=quality,
    )


def generate_subject(
    subject_index: int, spec: SynthSpec
) -> tuple[dict[str, SampledTrace], SubjectTruth]:
    """Generate all site traces for one subject plus the ground truth."""
    clean, truth = generate_trace(subject_index, spec)
    traces = {}
    for site_index, site in enumerate(SITES):
        profile = spec.site_profiles.get(site)
        if profile is None:
            continue
        site_rng = np.random.default_rng([spec.seed, subject_index, site_index])
        traces[site] = degrade_trace(clean, profile, site_rng)
    return traces, truth


@dataclass(frozen=True)
class CohortPaths:
    """Files a generated cohort consists of."""

    manifest: str
    ground_truth: str


def generate_cohort(spec: SynthSpec, out_dir) -> CohortPaths:
    """Write a full synthetic cohort to disk.

    Produces one trace CSV per subject and site under ``out_dir/traces``, a
    cohort manifest ``out_dir/manifest.json`` referencing them relatively,
    and ``out_dir/ground_truth.json`` with the schedule every subject was
    generated from. Byte-identical for identical specs.
    """
    out_dir = os.fspath(out_dir)
    traces_dir = os.path.join(out_dir, "traces")
    os.makedirs(traces_dir, exist_ok=True)
    manifest_subjects = []
    truth_subjects = []
    for subject_index in range(1, spec.n_subjects + 1):
        traces, truth = generate_subject(subject_index, spec)
        rel_paths = {}
        for site, trace in traces.items():
            rel = os.path.join("traces", f"{truth.subject_id}_{site}.csv")
            write_trace_csv(trace, os.path.join(out_dir, rel))
            rel_paths[site] = rel
        meta_rng = np.random.default_rng([spec.seed, subject_index, 99])
        meta = {
            "age": int(meta_rng.integers(25, 81)),
            "sex": "m" if meta_rng.random() < 0.73 else "f",
            "bmi": round(float(np.clip(meta_rng.normal(29.0, 5.0), 16.0, 55.0)), 1),
        }
        manifest_subjects.append(
            {
                "id": truth.subject_id,
                "ahi_ref": round(truth.ahi_ref, 6),
                "traces": rel_paths,
                "meta": meta,
            }
        )
        truth_subjects.append(
            {
                "id": truth.subject_id,
                "true_odi": round(truth.true_odi, 6),
                "ahi_ref": round(truth.ahi_ref, 6),
                "severity": truth.severity,
                "n_events": len(truth.dips),
                "events": [
                    {
                        "onset_s": round(d.onset_s, 3),
                        "depth": round(d.depth, 4),
                        "hold_s": round(d.hold_s, 3),
                    }
                    for d in truth.dips
                ],
            }
        )
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump({"subjects": manifest_subjects}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    truth_path = os.path.join(out_dir, "ground_truth.json")
    with open(truth_path, "w") as fh:
        json.dump(
            {"seed": spec.seed, "n_subjects": spec.n_subjects, "subjects": truth_subjects},
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return CohortPaths(manifest=manifest_path, ground_truth=truth_path)
