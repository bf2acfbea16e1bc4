"""Trace CSV parsing/writing and cohort manifest loading.

Trace files are CSV with header ``t_s,spo2_pct,quality`` (the quality column
is optional). ``t_s`` is seconds from trace start and must be strictly
increasing; an empty ``spo2_pct`` field is a MISSING sample; an empty
``quality`` field (or an absent column) defaults to 1.0. Rows are resampled
onto a uniform grid by holding the most recent sample for at most
HOLD_HORIZON_S seconds; grid cells with no sample inside the horizon are
MISSING with quality 0.

A cohort manifest is JSON: ``{"subjects": [{"id": ..., "ahi_ref": ...,
"traces": {site: path, ...}, "meta": {...}}, ...]}`` with trace paths
resolved relative to the manifest's directory.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import SITES, SampledTrace, SubjectRecord
from .errors import DesatkitError, FormatError, ManifestError, ParseError

TRACE_FIELDS = ("t_s", "spo2_pct", "quality")

HOLD_HORIZON_S = 2.0


def parse_trace_csv(path, sample_period: float = 1.0) -> SampledTrace:
    """Read one trace CSV and resample it onto a uniform grid.

    Args:
        path: file to read.
        sample_period: grid spacing in seconds for the returned trace.

    Returns:
        The trace, with ``start_epoch`` set to the first row's ``t_s``.

    Raises:
        FormatError: bad header, no data rows, or non-increasing timestamps.
        ParseError: an individual field is malformed or out of range; the
            error carries the 1-based line number (header is line 1).
    """
    t_list: list[float] = []
    v_list: list[float] = []
    q_list: list[float] = []
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        cols = tuple(c.strip() for c in header)
        if cols == TRACE_FIELDS:
            has_quality = True
        elif cols == TRACE_FIELDS[:2]:
            has_quality = False
        else:
            raise FormatError(
                f"{path}: expected header t_s,spo2_pct[,quality], got {','.join(header)!r}"
            )
        n_fields = 3 if has_quality else 2
        lineno = 1
        for row in reader:
            lineno += 1
            if len(row) != n_fields:
                raise ParseError(
                    f"expected {n_fields} fields, got {len(row)}", path, lineno
                )
            try:
                t_list.append(float(row[0]))
                v = row[1]
                v_list.append(float(v) if v else math.nan)
                if has_quality:
                    q = row[2]
                    q_list.append(float(q) if q else 1.0)
                else:
                    q_list.append(1.0)
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
    if not t_list:
        raise FormatError(f"{path}: no data rows")

    t = np.asarray(t_list)
    v = np.asarray(v_list)
    q = np.asarray(q_list)

    bad = np.flatnonzero(~np.isfinite(t))
    if len(bad):
        raise ParseError(f"timestamp {t[bad[0]]!r} is not finite", path, int(bad[0]) + 2)
    if len(t) > 1:
        bad = np.flatnonzero(~(np.diff(t) > 0.0))
        if len(bad):
            raise FormatError(
                f"{path}: timestamps not strictly increasing at line {int(bad[0]) + 3}"
            )
    bad = np.flatnonzero((v < 0.0) | (v > 100.0) | np.isinf(v))
    if len(bad):
        raise ParseError(
            f"SpO2 value {v[bad[0]]!r} out of range [0, 100]", path, int(bad[0]) + 2
        )
    bad = np.flatnonzero(np.isnan(q) | (q < 0.0) | (q > 1.0))
    if len(bad):
        raise ParseError(
            f"quality {q[bad[0]]!r} out of range [0, 1]", path, int(bad[0]) + 2
        )

    values, quality = _to_grid(t, v, q, sample_period)
    return SampledTrace(
        values, start_epoch=float(t[0]), sample_period=sample_period, quality=quality
    )


def _to_grid(t, v, q, period):
    """Hold-last resampling onto the uniform grid starting at t[0]."""
    n = int(math.floor((t[-1] - t[0]) / period + 1e-9)) + 1
    grid = t[0] + np.arange(n) * period
    if n == len(t) and np.max(np.abs(t - grid)) <= 1e-9:
        return v, q
    idx = np.searchsorted(t, grid + period * 1e-9, side="right") - 1
    age = grid - t[idx]
    held = age <= HOLD_HORIZON_S + 1e-12
    values = np.where(held, v[idx], np.nan)
    quality = np.where(held, q[idx], 0.0)
    return values, quality


def write_trace_csv(trace: SampledTrace, path) -> None:
    """Write a trace as CSV, one row per grid sample.

    ``t_s`` is written relative to trace start (``start_epoch`` is not
    persisted). Floats use shortest exact representation, so a parse of the
    written file reproduces the samples bit for bit. MISSING values become
    empty fields.
    """
    period = trace.sample_period
    ts = (np.arange(len(trace)) * period).tolist()
    vals = trace.values.tolist()
    lines = []
    if trace.quality is None:
        header = "t_s,spo2_pct"
        for t, v in zip(ts, vals):
            lines.append(f"{t!r},{'' if v != v else repr(v)}")
    else:
        header = "t_s,spo2_pct,quality"
        for t, v, q in zip(ts, vals, trace.quality.tolist()):
            lines.append(f"{t!r},{'' if v != v else repr(v)},{q!r}")
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        fh.write("\n".join(lines))
        fh.write("\n")


@dataclass(frozen=True)
class ManifestEntry:
    """One manifest row: identity, reference index, and trace file paths."""

    subject_id: str
    ahi_ref: float
    trace_paths: Mapping[str, str]
    meta: Mapping | None = None


@dataclass(frozen=True)
class LoadFailure:
    """A subject that could not be loaded, with the reason."""

    subject_id: str
    site: str | None
    message: str


@dataclass(frozen=True)
class CohortLoad:
    """Outcome of loading a cohort: usable records plus per-subject failures."""

    records: tuple[SubjectRecord, ...]
    failures: tuple[LoadFailure, ...]


def _require(cond: bool, where: str, what: str):
    if not cond:
        raise ManifestError(f"{where}: {what}")


def load_manifest(path) -> tuple[ManifestEntry, ...]:
    """Parse and validate a cohort manifest (structure only, no file I/O)."""
    with open(path, "r") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: invalid JSON: {exc}") from None
    _require(isinstance(doc, dict), str(path), "top level must be an object")
    subjects = doc.get("subjects")
    _require(isinstance(subjects, list), str(path), 'missing "subjects" list')
    _require(len(subjects) > 0, str(path), "manifest lists no subjects")
    entries = []
    seen: set[str] = set()
    for k, item in enumerate(subjects):
        where = f"{path}: subjects[{k}]"
        _require(isinstance(item, dict), where, "must be an object")
        sid = item.get("id")
        _require(isinstance(sid, str) and sid != "", where, 'missing or empty "id"')
        _require(sid not in seen, where, f"duplicate subject id {sid!r}")
        seen.add(sid)
        ahi = item.get("ahi_ref")
        _require(
            isinstance(ahi, (int, float)) and not isinstance(ahi, bool),
            where,
            'missing or non-numeric "ahi_ref"',
        )
        _require(math.isfinite(ahi) and ahi >= 0, where, f"ahi_ref {ahi!r} must be >= 0")
        traces = item.get("traces")
        _require(
            isinstance(traces, dict) and len(traces) > 0,
            where,
            'missing or empty "traces" object',
        )
        for site, p in traces.items():
            _require(site in SITES, where, f"unknown site {site!r}")
            _require(isinstance(p, str) and p != "", where, f"bad path for site {site!r}")
        meta = item.get("meta")
        _require(meta is None or isinstance(meta, dict), where, '"meta" must be an object')
        entries.append(ManifestEntry(sid, float(ahi), dict(traces), meta))
    return tuple(entries)


def load_cohort(manifest_path, sample_period: float = 1.0) -> CohortLoad:
    """Load every subject a manifest lists, collecting per-subject failures.

    A subject with any unreadable or invalid trace file is skipped whole and
    reported in ``failures``; the remaining subjects load normally. Trace
    paths are resolved relative to the manifest's directory.
    """
    entries = load_manifest(manifest_path)
    base = os.path.dirname(os.fspath(manifest_path))
    records = []
    failures = []
    for entry in entries:
        traces = {}
        failure = None
        for site in sorted(entry.trace_paths):
            trace_path = os.path.join(base, entry.trace_paths[site])
            try:
                traces[site] = parse_trace_csv(trace_path, sample_period=sample_period)
            except (OSError, DesatkitError) as exc:
                failure = LoadFailure(entry.subject_id, site, str(exc))
                break
        if failure is not None:
            failures.append(failure)
            continue
        records.append(SubjectRecord(entry.subject_id, entry.ahi_ref, traces, entry.meta))
    return CohortLoad(tuple(records), tuple(failures))
