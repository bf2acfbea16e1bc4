"""Shared value types for SpO2 trace analysis.

A recording is a uniformly sampled SpO2 sequence with an optional quality
channel. Samples that are unusable (sensor off, artefact, gated out) are
MISSING, represented as NaN. All downstream code treats these types as
immutable values: arrays are coerced to read-only float64 and every
invariant is checked at construction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import DomainError

MISSING = float("nan")

SITES = ("fingertip", "upper_arm", "wrist")

SEVERITY_CUTOFFS = (5.0, 15.0, 30.0)


class SeverityClass(IntEnum):
    """Clinical severity bands over the apnea-hypopnea index."""

    NORMAL = 0
    MILD = 1
    MODERATE = 2
    SEVERE = 3

    @property
    def label(self) -> str:
        return self.name.lower()


def severity_class(ahi: float) -> SeverityClass:
    """Map an AHI value to its severity band.

    Bands use inclusive lower bounds: normal < 5, 5 <= mild < 15,
    15 <= moderate < 30, severe >= 30.

    Args:
        ahi: events per hour, finite and non-negative.

    Returns:
        The band as a :class:`SeverityClass`.

    Raises:
        DomainError: if ``ahi`` is negative, NaN, or infinite.
    """
    if not math.isfinite(ahi) or ahi < 0:
        raise DomainError(f"AHI must be finite and non-negative, got {ahi!r}")
    if ahi < SEVERITY_CUTOFFS[0]:
        return SeverityClass.NORMAL
    if ahi < SEVERITY_CUTOFFS[1]:
        return SeverityClass.MILD
    if ahi < SEVERITY_CUTOFFS[2]:
        return SeverityClass.MODERATE
    return SeverityClass.SEVERE


def _frozen_array(x, dtype=float) -> np.ndarray:
    arr = np.array(x, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampledTrace:
    """A uniformly sampled SpO2 recording.

    Attributes:
        values: SpO2 percent per sample; NaN marks MISSING. Valid samples
            lie in [0, 100].
        start_epoch: time of the first sample, seconds.
        sample_period: seconds between samples, > 0.
        quality: optional per-sample quality index in [0, 1]. NaN is not
            allowed here; an unknown quality must be stated (convention:
            1.0 when the source had no quality channel).
    """

    values: np.ndarray
    start_epoch: float = 0.0
    sample_period: float = 1.0
    quality: np.ndarray | None = None

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.ndim != 1:
            raise DomainError(f"values must be 1-D, got shape {values.shape}")
        if len(values) < 1:
            raise DomainError("a trace needs at least one sample")
        if not math.isfinite(self.start_epoch):
            raise DomainError(f"start_epoch must be finite, got {self.start_epoch!r}")
        if not (math.isfinite(self.sample_period) and self.sample_period > 0):
            raise DomainError(
                f"sample_period must be positive and finite, got {self.sample_period!r}"
            )
        finite = values[~np.isnan(values)]
        if len(finite) and (np.any(~np.isfinite(finite)) or finite.min() < 0.0 or finite.max() > 100.0):
            raise DomainError("SpO2 values must be NaN or within [0, 100]")
        object.__setattr__(self, "values", values)
        if self.quality is not None:
            quality = _frozen_array(self.quality)
            if quality.shape != values.shape:
                raise DomainError(
                    f"quality shape {quality.shape} does not match values shape {values.shape}"
                )
            if np.any(np.isnan(quality)) or quality.min() < 0.0 or quality.max() > 1.0:
                raise DomainError("quality must lie within [0, 1] and may not be NaN")
            object.__setattr__(self, "quality", quality)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def valid_mask(self) -> np.ndarray:
        """Boolean mask of non-MISSING samples."""
        return ~np.isnan(self.values)

    @property
    def n_valid(self) -> int:
        return int(self.valid_mask.sum())

    @property
    def duration(self) -> float:
        """Total spanned time in seconds (sample count times period)."""
        return len(self.values) * self.sample_period

    def times(self) -> np.ndarray:
        """Sample timestamps in seconds (epoch-based)."""
        return self.start_epoch + np.arange(len(self.values)) * self.sample_period


@dataclass(frozen=True)
class DesatEvent:
    """One detected desaturation event, indexed into its source trace.

    Attributes:
        onset_idx: sample where the drop first crossed the threshold.
        nadir_idx: sample of the deepest value within the event.
        recovery_idx: sample where the closing rule fired.
        baseline: running local maximum the drop was measured against.
        nadir_value: SpO2 at the nadir.
        depth: baseline - nadir_value, percent.
        duration: (recovery_idx - onset_idx) * sample_period, seconds.
    """

    onset_idx: int
    nadir_idx: int
    recovery_idx: int
    baseline: float
    nadir_value: float
    depth: float
    duration: float

    def __post_init__(self):
        if not (0 <= self.onset_idx <= self.nadir_idx <= self.recovery_idx):
            raise DomainError(
                f"event indices must satisfy 0 <= onset <= nadir <= recovery, "
                f"got ({self.onset_idx}, {self.nadir_idx}, {self.recovery_idx})"
            )
        if not (0.0 <= self.nadir_value <= self.baseline <= 100.0):
            raise DomainError("event requires 0 <= nadir_value <= baseline <= 100")
        if abs(self.depth - (self.baseline - self.nadir_value)) > 1e-9:
            raise DomainError("depth must equal baseline - nadir_value")
        if not self.duration > 0:
            raise DomainError("event duration must be positive")


@dataclass(frozen=True)
class SubjectRecord:
    """One cohort subject: reference AHI plus traces keyed by sensor site.

    Attributes:
        subject_id: unique, non-empty identifier.
        ahi_ref: reference apnea-hypopnea index, events/h, >= 0.
        traces: mapping site name -> trace; sites limited to SITES.
        meta: optional free-form metadata (age, sex, bmi, ...).
    """

    subject_id: str
    ahi_ref: float
    traces: Mapping[str, SampledTrace]
    meta: Mapping | None = None

    def __post_init__(self):
        if not self.subject_id:
            raise DomainError("subject_id must be non-empty")
        if not (math.isfinite(self.ahi_ref) and self.ahi_ref >= 0):
            raise DomainError(f"ahi_ref must be finite and >= 0, got {self.ahi_ref!r}")
        if not self.traces:
            raise DomainError(f"subject {self.subject_id!r} has no traces")
        unknown = set(self.traces) - set(SITES)
        if unknown:
            raise DomainError(
                f"subject {self.subject_id!r} has unknown sites {sorted(unknown)}"
            )
        object.__setattr__(self, "traces", MappingProxyType(dict(self.traces)))

    def __getstate__(self):
        state = self.__dict__.copy()
        state["traces"] = dict(self.traces)
        return state

    def __setstate__(self, state):
        for k, v in state.items():
            object.__setattr__(self, k, v)
        object.__setattr__(self, "traces", MappingProxyType(dict(state["traces"])))

    @property
    def severity(self) -> SeverityClass:
        return severity_class(self.ahi_ref)


@dataclass(frozen=True)
class AnalysisResult:
    """Per-trace analysis outcome: detected events and the resulting index.

    Attributes:
        subject_id: subject the trace belongs to ("" for standalone traces).
        site: sensor site ("" when unknown).
        odi: desaturation events per hour of valid recording.
        n_events: number of detected events.
        valid_duration: seconds of non-MISSING recording after gating.
        events: the detected events, in onset order.
    """

    subject_id: str
    site: str
    odi: float
    n_events: int
    valid_duration: float
    events: tuple[DesatEvent, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.n_events != len(self.events):
            raise DomainError("n_events must match len(events)")
        if not (math.isfinite(self.odi) and self.odi >= 0):
            raise DomainError(f"odi must be finite and >= 0, got {self.odi!r}")
        if not self.valid_duration > 0:
            raise DomainError("valid_duration must be positive for a defined index")
        if abs(self.odi - self.n_events / (self.valid_duration / 3600.0)) > 1e-6:
            raise DomainError("odi inconsistent with n_events and valid_duration")
