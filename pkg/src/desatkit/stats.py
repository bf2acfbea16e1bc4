"""Agreement statistics for paired SpO2 channels and paired indices.

Three views of agreement:

* sample-level: bias, RMS difference, and acceptance rate between a test
  channel and a reference channel on a shared grid (:func:`compare_spo2`);
* subject-level: Bland-Altman analysis of paired index values
  (:func:`bland_altman`), reporting both the normal-theory limits of
  agreement and the empirical percentile interval;
* trend: ordinary least squares fit with Pearson r (:func:`linear_fit`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as _sstats

from .core import SampledTrace
from .errors import (
    AlignmentError,
    DegenerateFitError,
    DomainError,
    InsufficientDataError,
)

LOA_Z = 1.96

CI_LEVEL = 0.95

PERCENTILES = (2.5, 97.5)


@dataclass(frozen=True)
class Spo2Agreement:
    """Sample-level agreement between a test and a reference channel.

    Attributes:
        bias: mean(test - reference) over samples valid in both, percent.
        a_rms: root-mean-square of the same differences, percent.
        acceptance_rate: percent of reference-valid samples that are also
            valid in the test channel.
        n_pairs: number of samples valid in both channels.
        n_ref_valid: number of valid reference samples (the acceptance
            denominator; kept so results can be pooled exactly).
    """

    bias: float
    a_rms: float
    acceptance_rate: float
    n_pairs: int
    n_ref_valid: int

    def __post_init__(self):
        if self.n_pairs < 1 or self.n_ref_valid < self.n_pairs:
            raise DomainError("need n_ref_valid >= n_pairs >= 1")
        if self.a_rms + 1e-9 < abs(self.bias):
            raise DomainError("a_rms can never be below |bias|")
        if not (0.0 <= self.acceptance_rate <= 100.0 + 1e-9):
            raise DomainError("acceptance_rate must lie in [0, 100]")


def compare_spo2(test: SampledTrace, reference: SampledTrace) -> Spo2Agreement:
    """Compare two channels of the same recording sample by sample.

    Both traces must sit on the same grid: equal length, start epochs within
    1e-9 s, sample periods within 1e-12 s.

    Raises:
        AlignmentError: if the grids differ.
        InsufficientDataError: if the reference has no valid samples, or no
            sample is valid in both channels.
    """
    if len(test) != len(reference):
        raise AlignmentError(
            f"trace lengths differ: {len(test)} vs {len(reference)}"
        )
    if abs(test.start_epoch - reference.start_epoch) > 1e-9:
        raise AlignmentError(
            f"start epochs differ: {test.start_epoch!r} vs {reference.start_epoch!r}"
        )
    if abs(test.sample_period - reference.sample_period) > 1e-12:
        raise AlignmentError(
            f"sample periods differ: {test.sample_period!r} vs {reference.sample_period!r}"
        )
    ref_valid = reference.valid_mask
    n_ref = int(ref_valid.sum())
    if n_ref == 0:
        raise InsufficientDataError("reference channel has no valid samples")
    both = ref_valid & test.valid_mask
    n_pairs = int(both.sum())
    if n_pairs == 0:
        raise InsufficientDataError("no samples are valid in both channels")
    d = test.values[both] - reference.values[both]
    return Spo2Agreement(
        bias=float(d.mean()),
        a_rms=float(np.sqrt(np.mean(d * d))),
        acceptance_rate=100.0 * n_pairs / n_ref,
        n_pairs=n_pairs,
        n_ref_valid=n_ref,
    )


def pool_spo2(parts: Sequence[Spo2Agreement]) -> Spo2Agreement:
    """Pool per-recording agreement results into one sample-weighted result.

    Equivalent to computing the statistics over the concatenation of all
    underlying sample pairs (sums are reconstructed exactly from the parts).
    """
    if not parts:
        raise InsufficientDataError("nothing to pool")
    n_pairs = sum(p.n_pairs for p in parts)
    n_ref = sum(p.n_ref_valid for p in parts)
    sum_d = sum(p.bias * p.n_pairs for p in parts)
    sum_d2 = sum(p.a_rms * p.a_rms * p.n_pairs for p in parts)
    return Spo2Agreement(
        bias=sum_d / n_pairs,
        a_rms=math.sqrt(sum_d2 / n_pairs),
        acceptance_rate=100.0 * n_pairs / n_ref,
        n_pairs=n_pairs,
        n_ref_valid=n_ref,
    )


@dataclass(frozen=True)
class BlandAltman:
    """Bland-Altman agreement between two paired measurements.

    Attributes:
        bias: mean difference a - b.
        sd: sample standard deviation of the differences (ddof=1).
        loa_low / loa_high: bias -/+ 1.96 sd (limits of agreement).
        bias_ci_low / bias_ci_high: 95% t-based confidence interval for
            the bias.
        p_low / p_high: empirical 2.5th / 97.5th percentiles of the
            differences, reported alongside the normal-theory limits.
        n: number of pairs.
    """

    bias: float
    sd: float
    loa_low: float
    loa_high: float
    bias_ci_low: float
    bias_ci_high: float
    p_low: float
    p_high: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("need at least two pairs")
        if self.sd < 0:
            raise DomainError("sd must be >= 0")
        if not (self.loa_low <= self.bias <= self.loa_high):
            raise DomainError("limits of agreement must bracket the bias")


def bland_altman(a, b) -> BlandAltman:
    """Bland-Altman analysis of paired values.

    Args:
        a: first measurement per subject (e.g. index from the test site).
        b: second measurement per subject (e.g. index from the reference).

    Raises:
        DomainError: shapes differ or values are not finite.
        InsufficientDataError: fewer than two pairs.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError(f"paired 1-D arrays required, got {a.shape} and {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DomainError("values must be finite")
    n = len(a)
    if n < 2:
        raise InsufficientDataError(f"need at least two pairs, got {n}")
    d = a - b
    bias = float(d.mean())
    sd = float(d.std(ddof=1))
    half = LOA_Z * sd
    tq = float(_sstats.t.ppf(0.5 + CI_LEVEL / 2.0, n - 1))
    ci_half = tq * sd / math.sqrt(n)
    p_low, p_high = np.percentile(d, PERCENTILES)
    return BlandAltman(
        bias=bias,
        sd=sd,
        loa_low=bias - half,
        loa_high=bias + half,
        bias_ci_low=bias - ci_half,
        bias_ci_high=bias + ci_half,
        p_low=float(p_low),
        p_high=float(p_high),
        n=n,
    )


@dataclass(frozen=True)
class LinFit:
    """Ordinary least squares line with Pearson correlation.

    Attributes:
        slope / intercept: the fitted line y = slope * x + intercept.
        r: Pearson correlation; 0.0 by convention when y has zero variance.
        n: number of points.
    """

    slope: float
    intercept: float
    r: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("need at least two points")
        if not -1.0 <= self.r <= 1.0:
            raise DomainError(f"r must lie in [-1, 1], got {self.r!r}")


def linear_fit(x, y) -> LinFit:
    """Least squares fit of y on x.

    Raises:
        DomainError: shapes differ or values are not finite.
        InsufficientDataError: fewer than two points.
        DegenerateFitError: x has zero variance (all values identical).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError(f"paired 1-D arrays required, got {x.shape} and {y.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("values must be finite")
    n = len(x)
    if n < 2:
        raise InsufficientDataError(f"need at least two points, got {n}")
    if np.all(x == x[0]):
        raise DegenerateFitError("x has zero variance, slope is undefined")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    sxy = float(dx @ dy)
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    if np.all(y == y[0]):
        r = 0.0
    else:
        syy = float(dy @ dy)
        r = min(1.0, max(-1.0, sxy / math.sqrt(sxx * syy)))
    return LinFit(slope=slope, intercept=intercept, r=r, n=n)
