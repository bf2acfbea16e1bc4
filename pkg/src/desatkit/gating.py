"""Quality gating of SpO2 traces.

Gating turns low-quality samples into MISSING before any event detection.
Optionally, short MISSING runs left after gating can be bridged by linear
interpolation so that brief sensor dropouts do not fragment events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SampledTrace
from .errors import DomainError


@dataclass(frozen=True)
class GateConfig:
    """Quality gate parameters.

    Attributes:
        qi_threshold: samples with quality strictly below this become
            MISSING. 0 disables the gate, 1 keeps only perfect samples.
        gap_bridge: maximum MISSING run length (seconds) to fill by linear
            interpolation after gating. 0 disables bridging.
    """

    qi_threshold: float = 0.5
    gap_bridge: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.qi_threshold) and 0.0 <= self.qi_threshold <= 1.0):
            raise DomainError(
                f"qi_threshold must lie in [0, 1], got {self.qi_threshold!r}"
            )
        if not (math.isfinite(self.gap_bridge) and self.gap_bridge >= 0.0):
            raise DomainError(f"gap_bridge must be >= 0, got {self.gap_bridge!r}")


def _missing_runs(missing: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, end) index ranges of consecutive True entries."""
    edges = np.flatnonzero(np.diff(np.concatenate(([False], missing, [False])).astype(np.int8)))
    return list(zip(edges[0::2].tolist(), edges[1::2].tolist()))


def apply_gate(trace: SampledTrace, config: GateConfig | None = None) -> SampledTrace:
    """Blank low-quality samples, then bridge short MISSING runs.

    The gate sets every sample whose quality is strictly below
    ``qi_threshold`` to MISSING. Afterwards, interior MISSING runs no longer
    than ``gap_bridge`` seconds are filled by linear interpolation between
    the flanking valid samples. Runs touching either end of the trace are
    never bridged. The quality channel is passed through unchanged: it
    records what the sensor reported, not what processing did.

    Args:
        trace: input trace; left untouched.
        config: gate parameters, defaults if None.

    Returns:
        A new trace on the same grid.
    """
    cfg = config or GateConfig()
    values = np.array(trace.values, copy=True)
    if trace.quality is not None and cfg.qi_threshold > 0.0:
        values[trace.quality < cfg.qi_threshold] = np.nan
    if cfg.gap_bridge > 0.0:
        max_run = cfg.gap_bridge / trace.sample_period + 1e-9
        n = len(values)
        for start, end in _missing_runs(np.isnan(values)):
            if start == 0 or end == n or (end - start) > max_run:
                continue
            left = values[start - 1]
            right = values[end]
            steps = np.arange(1, end - start + 1, dtype=float)
            values[start:end] = left + (right - left) * steps / (end - start + 1)
    return SampledTrace(
        values,
        start_epoch=trace.start_epoch,
        sample_period=trace.sample_period,
        quality=trace.quality,
    )


def valid_duration(trace: SampledTrace) -> float:
    """Seconds of non-MISSING recording: valid sample count times period."""
    return trace.n_valid * trace.sample_period
