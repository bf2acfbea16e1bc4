"""ROC analysis and threshold calibration for index-based screening.

A screening task asks how well a per-subject score (here: the desaturation
index) separates subjects above a reference cutoff from those below it.
Classification convention throughout: predict positive iff score >
threshold. The ROC curve is built over tie groups of the sorted scores, and
its trapezoidal area is accumulated in integer arithmetic so that it equals
the pairwise concordance probability (ties counted half) exactly, not just
within float tolerance.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import SubjectRecord
from .desat import DEFAULT_MIN_VALID_DURATION_S, DetectConfig, analyze_trace
from .errors import (
    DegenerateFitError,
    DegenerateInputError,
    DomainError,
    InsufficientDataError,
    UndefinedOdi,
)
from .gating import GateConfig
from .stats import LinFit, linear_fit


@dataclass(frozen=True)
class LabeledScore:
    """One subject's score with its reference label."""

    subject_id: str
    score: float
    label: bool

    def __post_init__(self):
        if not (math.isfinite(self.score) and self.score >= 0):
            raise DomainError(f"score must be finite and >= 0, got {self.score!r}")


@dataclass(frozen=True)
class RocCurve:
    """An ROC curve over score tie groups.

    Attributes:
        fpr / tpr: curve points from (0, 0) to (1, 1), one per tie group
            plus the origin, both non-decreasing.
        thresholds: threshold realizing each point under "positive iff
            score > threshold": the k-th point uses the k-th distinct score
            (descending), the final all-positive point uses min score - 1.
        auc: trapezoidal area, equal to the concordance probability.
        n_positive / n_negative: class counts.
    """

    fpr: tuple[float, ...]
    tpr: tuple[float, ...]
    thresholds: tuple[float, ...]
    auc: float
    n_positive: int
    n_negative: int

    def __post_init__(self):
        if not (len(self.fpr) == len(self.tpr) == len(self.thresholds) >= 2):
            raise DomainError("curve needs equally many fpr/tpr/threshold entries, >= 2")
        if self.fpr[0] != 0.0 or self.tpr[0] != 0.0 or self.fpr[-1] != 1.0 or self.tpr[-1] != 1.0:
            raise DomainError("curve must run from (0, 0) to (1, 1)")
        if any(b < a for a, b in zip(self.fpr, self.fpr[1:])) or any(
            b < a for a, b in zip(self.tpr, self.tpr[1:])
        ):
            raise DomainError("fpr and tpr must be non-decreasing")
        if not (0.0 <= self.auc <= 1.0):
            raise DomainError(f"auc must lie in [0, 1], got {self.auc!r}")
        if self.n_positive < 1 or self.n_negative < 1:
            raise DomainError("both classes must be present")


@dataclass(frozen=True)
class ClassificationMetrics:
    """Confusion counts and rates at one threshold (rates in percent)."""

    threshold: float
    sensitivity: float
    specificity: float
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise DomainError("confusion counts must be >= 0")
        for name in ("sensitivity", "specificity", "accuracy"):
            v = getattr(self, name)
            if not (0.0 <= v <= 100.0 + 1e-9):
                raise DomainError(f"{name} must lie in [0, 100], got {v!r}")


def _split_counts(scores: Sequence[LabeledScore]) -> tuple[int, int]:
    p = sum(1 for s in scores if s.label)
    n = len(scores) - p
    if p == 0 or n == 0:
        raise DegenerateInputError(
            f"both classes required, got {p} positive and {n} negative"
        )
    return p, n


def roc_curve(scores: Sequence[LabeledScore]) -> RocCurve:
    """Build the ROC curve of labeled scores.

    Ties share one curve point. The area is accumulated over tie groups in
    integer arithmetic and divided once, which makes it exactly equal to
    (concordant pairs + ties / 2) / (positives * negatives).

    Raises:
        DegenerateInputError: if only one class is present.
    """
    n_pos, n_neg = _split_counts(scores)
    by_score: dict[float, list[bool]] = {}
    for s in scores:
        by_score.setdefault(s.score, []).append(s.label)
    fpr = [0.0]
    tpr = [0.0]
    thresholds = []
    tp = fp = 0
    auc_num = 0  # sum of dFP * (TP_before + TP_after), exact in ints
    for score in sorted(by_score, reverse=True):
        labels = by_score[score]
        dtp = sum(labels)
        dfp = len(labels) - dtp
        auc_num += dfp * (2 * tp + dtp)
        tp += dtp
        fp += dfp
        thresholds.append(score)
        fpr.append(fp / n_neg)
        tpr.append(tp / n_pos)
    thresholds.append(min(by_score) - 1.0)
    return RocCurve(
        fpr=tuple(fpr),
        tpr=tuple(tpr),
        thresholds=tuple(thresholds),
        auc=auc_num / (2 * n_pos * n_neg),
        n_positive=n_pos,
        n_negative=n_neg,
    )


def evaluate_at(scores: Sequence[LabeledScore], threshold: float) -> ClassificationMetrics:
    """Confusion matrix and rates at a fixed threshold (positive iff >).

    Rates use the convention 0.0 when their denominator is zero.
    """
    tp = fp = tn = fn = 0
    for s in scores:
        if s.score > threshold:
            if s.label:
                tp += 1
            else:
                fp += 1
        elif s.label:
            fn += 1
        else:
            tn += 1
    n_pos = tp + fn
    n_neg = tn + fp
    total = n_pos + n_neg
    return ClassificationMetrics(
        threshold=threshold,
        sensitivity=100.0 * tp / n_pos if n_pos else 0.0,
        specificity=100.0 * tn / n_neg if n_neg else 0.0,
        accuracy=100.0 * (tp + tn) / total if total else 0.0,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
    )


def select_threshold(scores: Sequence[LabeledScore]) -> tuple[float, ClassificationMetrics]:
    """Pick the threshold maximizing squared sensitivity plus squared specificity.

    Candidates are the midpoints of adjacent distinct sorted scores plus one
    value below the minimum and one above the maximum. The objective is
    J = sensitivity^2 + specificity^2 on the 0..1 scale; ties go to the
    smallest candidate.

    Raises:
        DegenerateInputError: if only one class is present.
    """
    n_pos, n_neg = _split_counts(scores)
    ordered = sorted(scores, key=lambda s: s.score)
    xs = sorted({s.score for s in scores})
    candidates = [xs[0] - 1.0]
    candidates += [(a + b) / 2.0 for a, b in zip(xs, xs[1:])]
    candidates.append(xs[-1] + 1.0)

    sorted_scores = [s.score for s in ordered]
    cum_pos = [0]
    for s in ordered:
        cum_pos.append(cum_pos[-1] + (1 if s.label else 0))

    best_j = -1.0
    best = candidates[0]
    for theta in candidates:  # ascending, so ties keep the smallest
        k = bisect_right(sorted_scores, theta)  # scores <= theta
        tp = n_pos - cum_pos[k]
        tn = k - cum_pos[k]
        j = (tp / n_pos) ** 2 + (tn / n_neg) ** 2
        if j > best_j:
            best_j = j
            best = theta
    return best, evaluate_at(scores, best)


@dataclass(frozen=True)
class SubjectOutcome:
    """One subject's index at one site, next to the reference index."""

    subject_id: str
    ahi_ref: float
    odi: float
    n_events: int
    valid_duration: float


@dataclass(frozen=True)
class SiteScores:
    """All subjects' outcomes at one site, with per-subject failures."""

    site: str
    outcomes: tuple[SubjectOutcome, ...]
    failures: tuple[tuple[str, str], ...]  # (subject_id, reason)

    def fit(self) -> LinFit | None:
        """Index-versus-reference regression, None when not fittable."""
        if len(self.outcomes) < 2:
            return None
        try:
            return linear_fit(
                [o.odi for o in self.outcomes], [o.ahi_ref for o in self.outcomes]
            )
        except DegenerateFitError:
            return None


@dataclass(frozen=True)
class ScreeningCell:
    """Screening evaluation of one site at one cutoff."""

    site: str
    cutoff: float
    roc: RocCurve
    threshold: float
    metrics: ClassificationMetrics
    n: int
    n_positive: int


def score_site(
    records: Sequence[SubjectRecord],
    site: str,
    gate_config: GateConfig | None = None,
    detect_config: DetectConfig | None = None,
    min_valid_duration: float = DEFAULT_MIN_VALID_DURATION_S,
) -> SiteScores:
    """Run the per-trace pipeline for every subject at one site.

    Subjects are processed in subject_id order; subjects without a usable
    index at this site (no trace, too little valid data) are collected as
    failures rather than aborting the run.
    """
    outcomes = []
    failures = []
    for rec in sorted(records, key=lambda r: r.subject_id):
        trace = rec.traces.get(site)
        if trace is None:
            failures.append((rec.subject_id, f"no {site} trace"))
            continue
        try:
            res = analyze_trace(
                trace, gate_config, detect_config, rec.subject_id, site, min_valid_duration
            )
        except UndefinedOdi as exc:
            failures.append((rec.subject_id, str(exc)))
            continue
        outcomes.append(
            SubjectOutcome(rec.subject_id, rec.ahi_ref, res.odi, res.n_events, res.valid_duration)
        )
    return SiteScores(site, tuple(outcomes), tuple(failures))


def screen_cell(site_scores: SiteScores, cutoff: float) -> ScreeningCell:
    """Evaluate one site's scores against one reference cutoff.

    Labels are ahi_ref > cutoff; scores are the per-subject indices.

    Raises:
        InsufficientDataError: fewer than two subjects with a usable index.
        DegenerateInputError: all subjects fall on one side of the cutoff.
    """
    outcomes = site_scores.outcomes
    if len(outcomes) < 2:
        raise InsufficientDataError(
            f"site {site_scores.site}: need at least two subjects with a usable "
            f"index, got {len(outcomes)}"
        )
    scores = [
        LabeledScore(o.subject_id, o.odi, o.ahi_ref > cutoff) for o in outcomes
    ]
    roc = roc_curve(scores)
    threshold, metrics = select_threshold(scores)
    return ScreeningCell(
        site=site_scores.site,
        cutoff=cutoff,
        roc=roc,
        threshold=threshold,
        metrics=metrics,
        n=len(scores),
        n_positive=roc.n_positive,
    )


@dataclass(frozen=True)
class CohortSiteReport:
    """Everything one site's evaluation at one cutoff produces.

    Bundles the screening cell (ROC, calibrated threshold, metrics) with the
    index-versus-reference scatter it was computed from and that scatter's
    linear fit (None when the fit is degenerate).
    """

    scores: SiteScores
    cell: ScreeningCell
    fit: LinFit | None


def evaluate_cohort(
    records: Sequence[SubjectRecord],
    site: str,
    cutoff: float,
    gate_config: GateConfig | None = None,
    detect_config: DetectConfig | None = None,
    min_valid_duration: float = DEFAULT_MIN_VALID_DURATION_S,
) -> CohortSiteReport:
    """Full screening evaluation of one site at one cutoff.

    Composition of :func:`score_site` and :func:`screen_cell`; use those
    directly to share the per-subject scoring across several cutoffs.

    Raises:
        InsufficientDataError: fewer than two subjects with a usable index.
        DegenerateInputError: all subjects fall on one side of the cutoff.
    """
    scores = score_site(records, site, gate_config, detect_config, min_valid_duration)
    return CohortSiteReport(scores=scores, cell=screen_cell(scores, cutoff), fit=scores.fit())
