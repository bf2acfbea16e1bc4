"""Desaturation event detection and the per-hour desaturation index.

The detector is a single forward pass over a uniformly sampled SpO2 trace.
It keeps a running local maximum B (the baseline): B takes the value of any
valid sample >= B and is frozen while the signal descends. A candidate event
opens at the first sample whose drop below B reaches ``drop_threshold``, and
closes at the first later sample that either recovers a configurable
fraction of the drop toward B or exceeds ``max_event_duration``. Closed
candidates longer than ``min_duration`` (strictly) are emitted as events.

MISSING handling: runs of MISSING samples no longer than
``baseline_reset_gap`` seconds are skipped with all state intact, so an
event may bridge a short dropout. A strictly longer run aborts any open
candidate and re-seeds B at the first valid sample after the gap.

End-of-event handling: after an emitted event, B is re-seeded to the value
of the closing sample, so subsequent drops are measured against the
post-event level rather than a stale maximum (and a partially recovered
tail cannot immediately re-trigger). A rejected candidate (too short)
leaves no state behind: B is unchanged and the closing sample is processed
again under the normal rules, exactly as if the candidate had never opened.
A candidate still open when the trace ends is discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import AnalysisResult, DesatEvent, SampledTrace
from .errors import DomainError, UndefinedOdi
from .gating import GateConfig, apply_gate, valid_duration

DEFAULT_MIN_VALID_DURATION_S = 3600.0

EVENT_FIELDS = (
    "onset_s",
    "nadir_s",
    "recovery_s",
    "baseline",
    "nadir_value",
    "depth",
    "duration_s",
)


@dataclass(frozen=True)
class DetectConfig:
    """Detector parameters.

    Attributes:
        drop_threshold: minimum drop below the running baseline (percent)
            for a candidate to open.
        min_duration: events must last strictly longer than this (seconds).
        recovery_fraction: fraction of the baseline-to-nadir drop that must
            be regained for the event to close.
        baseline_reset_gap: MISSING runs strictly longer than this
            (seconds) abort the candidate and re-seed the baseline.
        max_event_duration: events are force-closed once they span this
            many seconds.
    """

    drop_threshold: float = 3.0
    min_duration: float = 5.0
    recovery_fraction: float = 1.0 / 3.0
    baseline_reset_gap: float = 30.0
    max_event_duration: float = 300.0

    def __post_init__(self):
        if not (math.isfinite(self.drop_threshold) and self.drop_threshold > 0):
            raise DomainError(f"drop_threshold must be > 0, got {self.drop_threshold!r}")
        if not (math.isfinite(self.min_duration) and self.min_duration >= 0):
            raise DomainError(f"min_duration must be >= 0, got {self.min_duration!r}")
        if not (
            math.isfinite(self.recovery_fraction) and 0.0 < self.recovery_fraction <= 1.0
        ):
            raise DomainError(
                f"recovery_fraction must lie in (0, 1], got {self.recovery_fraction!r}"
            )
        if not (math.isfinite(self.baseline_reset_gap) and self.baseline_reset_gap >= 0):
            raise DomainError(
                f"baseline_reset_gap must be >= 0, got {self.baseline_reset_gap!r}"
            )
        if not (math.isfinite(self.max_event_duration) and self.max_event_duration > 0):
            raise DomainError(
                f"max_event_duration must be > 0, got {self.max_event_duration!r}"
            )


def detect_desaturations(
    trace: SampledTrace, config: DetectConfig | None = None
) -> list[DesatEvent]:
    """Detect desaturation events in one pass over a trace.

    The trace is taken as-is: apply quality gating first if wanted (see
    :func:`analyze_trace` for the composed pipeline).

    Args:
        trace: uniformly sampled SpO2 trace; NaN marks MISSING samples.
        config: detector parameters, defaults if None.

    Returns:
        Detected events in onset order, non-overlapping. Indices refer to
        samples of ``trace``; durations count bridged MISSING samples.
    """
    cfg = config or DetectConfig()
    period = trace.sample_period
    drop = cfg.drop_threshold
    frac = cfg.recovery_fraction
    reset_gap = cfg.baseline_reset_gap
    max_dur = cfg.max_event_duration
    min_dur = cfg.min_duration

    values = trace.values.tolist()
    n = len(values)
    events: list[DesatEvent] = []
    baseline = None  # running local max; None until the first valid sample
    gap_run = 0  # consecutive MISSING samples immediately before index i
    onset = -1  # candidate onset index; -1 when no candidate is open
    nadir = 0.0
    nadir_idx = -1

    i = 0
    while i < n:
        s = values[i]
        if s != s:  # NaN
            gap_run += 1
            i += 1
            continue
        if gap_run:
            if gap_run * period > reset_gap:
                onset = -1
                baseline = s
                gap_run = 0
                i += 1
                continue
            gap_run = 0
        if baseline is None:
            baseline = s
            i += 1
            continue
        if onset < 0:
            if s >= baseline:
                baseline = s
            elif baseline - s >= drop:
                onset = i
                nadir = s
                nadir_idx = i
            i += 1
            continue
        if s < nadir:
            nadir = s
            nadir_idx = i
        if s >= baseline - frac * (baseline - nadir) or (i - onset) * period >= max_dur:
            span = (i - onset) * period
            if span > min_dur:
                events.append(
                    DesatEvent(onset, nadir_idx, i, baseline, nadir, baseline - nadir, span)
                )
                baseline = s
                onset = -1
                i += 1
            else:
                onset = -1  # rejected: re-process this sample candidate-free
            continue
        i += 1
    return events


def compute_odi(
    events: Sequence[DesatEvent],
    valid_duration_s: float,
    min_valid_duration: float = DEFAULT_MIN_VALID_DURATION_S,
) -> float:
    """Desaturation events per hour of valid recording.

    Args:
        events: detected events.
        valid_duration_s: seconds of non-MISSING recording the events came
            from (see :func:`desatkit.gating.valid_duration`).
        min_valid_duration: below this many seconds the index is undefined.

    Returns:
        len(events) / (valid_duration_s / 3600).

    Raises:
        UndefinedOdi: if ``valid_duration_s`` < ``min_valid_duration``.
        DomainError: if ``valid_duration_s`` is negative.
    """
    if valid_duration_s < 0:
        raise DomainError(f"valid duration must be >= 0, got {valid_duration_s!r}")
    if valid_duration_s < min_valid_duration:
        raise UndefinedOdi(valid_duration_s, min_valid_duration)
    return len(events) / (valid_duration_s / 3600.0)


def analyze_trace(
    trace: SampledTrace,
    gate_config: GateConfig | None = None,
    detect_config: DetectConfig | None = None,
    subject_id: str = "",
    site: str = "",
    min_valid_duration: float = DEFAULT_MIN_VALID_DURATION_S,
) -> AnalysisResult:
    """Gate a trace, detect events, and compute the per-hour index.

    Raises:
        UndefinedOdi: if the gated trace has less valid recording than
            ``min_valid_duration``.
    """
    gated = apply_gate(trace, gate_config)
    vd = valid_duration(gated)
    events = detect_desaturations(gated, detect_config)
    odi = compute_odi(events, vd, min_valid_duration)
    return AnalysisResult(subject_id, site, odi, len(events), vd, tuple(events))


def write_events_csv(events: Sequence[DesatEvent], sample_period: float, path) -> None:
    """Write events as CSV with times in seconds from trace start."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(EVENT_FIELDS) + "\n")
        for ev in events:
            fh.write(
                f"{ev.onset_idx * sample_period:.3f},"
                f"{ev.nadir_idx * sample_period:.3f},"
                f"{ev.recovery_idx * sample_period:.3f},"
                f"{ev.baseline:.4f},{ev.nadir_value:.4f},{ev.depth:.4f},"
                f"{ev.duration:.3f}\n"
            )
