"""Command-line interface.

Subcommands:
    analyze    one trace -> events + per-hour index (JSON, optional CSV)
    cohort     manifest -> full agreement + screening report (JSON, CSVs)
    calibrate  scores CSV -> best screening threshold (JSON)
    roc        scores CSV -> ROC curve + AUC (JSON, optional CSV)
    synth      generate a synthetic cohort with ground truth

Exit codes: 0 success; 2 unusable input (files, flags, config); 3 input
that parses but is too thin or too one-sided to analyze; 1 internal error.

Reports are deterministic: floats rounded to 6 decimals, keys sorted, no
paths or timestamps embedded, so identical inputs give identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import functools
import json
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .core import SITES, severity_class
from .desat import (
    DEFAULT_MIN_VALID_DURATION_S,
    DetectConfig,
    compute_odi,
    detect_desaturations,
    write_events_csv,
)
from .errors import (
    AlignmentError,
    DegenerateFitError,
    DegenerateInputError,
    DesatkitError,
    DomainError,
    FormatError,
    InsufficientDataError,
    ManifestError,
    ParseError,
    SynthSpecError,
    UndefinedOdi,
)
from .gating import GateConfig, apply_gate, valid_duration
from .ingest import load_cohort, parse_trace_csv
from .screening import (
    LabeledScore,
    SiteScores,
    SubjectOutcome,
    roc_curve,
    screen_cell,
    select_threshold,
)
from .stats import Spo2Agreement, bland_altman, compare_spo2, pool_spo2
from .synth import DEFAULT_SITE_PROFILES, SynthSpec, generate_cohort

SCHEMA = "desatkit/1"

_INPUT_ERRORS = (
    ParseError,
    FormatError,
    ManifestError,
    AlignmentError,
    DomainError,
    SynthSpecError,
    OSError,
    json.JSONDecodeError,
)

_DATA_ERRORS = (
    UndefinedOdi,
    InsufficientDataError,
    DegenerateInputError,
    DegenerateFitError,
)


# ---------------------------------------------------------------- reports


def _round_floats(obj):
    """Recursively round floats to 6 decimals; normalize -0.0 to 0.0."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        v = round(float(obj), 6)
        return 0.0 if v == 0.0 else v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def _dump_report(doc: dict) -> str:
    return json.dumps(_round_floats(doc), sort_keys=True, indent=2) + "\n"


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------- config files


_CONFIG_KEYS = {"gate", "detect", "cutoffs", "min_valid_s", "period_s", "sites"}
_GATE_KEYS = {"qi_threshold", "gap_bridge_s"}
_DETECT_KEYS = {"drop_pct", "min_dur_s", "recovery_frac", "reset_gap_s", "max_event_dur_s"}


def _load_config(path) -> dict:
    if path is None:
        return {}
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext == ".json":
        with open(path, "r") as fh:
            doc = json.load(fh)
    elif ext == ".toml":
        try:
            import tomllib as toml_reader  # python >= 3.11
        except ImportError:
            import tomli as toml_reader
        with open(path, "rb") as fh:
            doc = toml_reader.load(fh)
    else:
        raise FormatError(f"{path}: config must be .json or .toml")
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: config top level must be an object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise FormatError(f"{path}: unknown config keys {sorted(unknown)}")
    for section, allowed in (("gate", _GATE_KEYS), ("detect", _DETECT_KEYS)):
        sub = doc.get(section, {})
        if not isinstance(sub, dict):
            raise FormatError(f"{path}: {section!r} must be an object")
        bad = set(sub) - allowed
        if bad:
            raise FormatError(f"{path}: unknown {section} keys {sorted(bad)}")
    return doc


def _pick(flag_value, section: dict, key: str, default):
    if flag_value is not None:
        return flag_value
    if key in section:
        return section[key]
    return default


def _gate_config(args, cfg: dict) -> GateConfig:
    sec = cfg.get("gate", {})
    return GateConfig(
        qi_threshold=float(_pick(args.qi_threshold, sec, "qi_threshold", 0.5)),
        gap_bridge=float(_pick(args.gap_bridge_s, sec, "gap_bridge_s", 0.0)),
    )


def _detect_config(args, cfg: dict) -> DetectConfig:
    sec = cfg.get("detect", {})
    return DetectConfig(
        drop_threshold=float(_pick(args.drop_pct, sec, "drop_pct", 3.0)),
        min_duration=float(_pick(args.min_dur_s, sec, "min_dur_s", 5.0)),
        recovery_fraction=float(_pick(args.recovery_frac, sec, "recovery_frac", 1.0 / 3.0)),
        baseline_reset_gap=float(_pick(args.reset_gap_s, sec, "reset_gap_s", 30.0)),
        max_event_duration=float(_pick(args.max_event_dur_s, sec, "max_event_dur_s", 300.0)),
    )


def _min_valid(args, cfg: dict) -> float:
    return float(_pick(args.min_valid_s, cfg, "min_valid_s", DEFAULT_MIN_VALID_DURATION_S))


def _period(args, cfg: dict) -> float:
    return float(_pick(args.period_s, cfg, "period_s", 1.0))


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise DomainError(f"{flag} expects comma-separated numbers, got {text!r}") from None
    if not values:
        raise DomainError(f"{flag} expects at least one number")
    return values


def _config_doc(gate: GateConfig, detect: DetectConfig, min_valid: float) -> dict:
    return {
        "gate": {"qi_threshold": gate.qi_threshold, "gap_bridge_s": gate.gap_bridge},
        "detect": {
            "drop_pct": detect.drop_threshold,
            "min_dur_s": detect.min_duration,
            "recovery_frac": detect.recovery_fraction,
            "reset_gap_s": detect.baseline_reset_gap,
            "max_event_dur_s": detect.max_event_duration,
        },
        "min_valid_s": min_valid,
    }


# ---------------------------------------------------------------- analyze


def cmd_analyze(args) -> int:
    cfg = _load_config(args.config)
    gate = _gate_config(args, cfg)
    detect = _detect_config(args, cfg)
    min_valid = _min_valid(args, cfg)
    trace = parse_trace_csv(args.trace, sample_period=_period(args, cfg))
    gated = apply_gate(trace, gate)
    vd = valid_duration(gated)
    events = detect_desaturations(gated, detect)
    odi = compute_odi(events, vd, min_valid)
    if args.events_csv:
        write_events_csv(events, trace.sample_period, args.events_csv)
    period = trace.sample_period
    doc = {
        "schema": SCHEMA,
        "kind": "analyze",
        "site": args.site or "",
        "n_samples": len(trace),
        "n_valid": gated.n_valid,
        "valid_duration_s": vd,
        "n_events": len(events),
        "odi": odi,
        "config": _config_doc(gate, detect, min_valid),
        "events": [
            {
                "onset_s": ev.onset_idx * period,
                "nadir_s": ev.nadir_idx * period,
                "recovery_s": ev.recovery_idx * period,
                "baseline": ev.baseline,
                "nadir_value": ev.nadir_value,
                "depth": ev.depth,
                "duration_s": ev.duration,
            }
            for ev in events
        ],
    }
    _emit(_dump_report(doc), args.out)
    return 0


# ----------------------------------------------------------------- cohort


def _subject_cells(record, sites, gate, detect, min_valid):
    """Per-subject work unit: per-site outcome plus agreement vs fingertip.

    Returns plain tuples so the result travels cheaply between processes.
    """
    gated = {}
    for site in sites:
        trace = record.traces.get(site)
        if trace is not None:
            gated[site] = apply_gate(trace, gate)
    cells = {}
    for site in sites:
        g = gated.get(site)
        if g is None:
            cells[site] = ("missing", f"no {site} trace")
            continue
        vd = valid_duration(g)
        events = detect_desaturations(g, detect)
        try:
            odi = compute_odi(events, vd, min_valid)
        except UndefinedOdi as exc:
            cells[site] = ("undefined", str(exc))
            continue
        cells[site] = ("ok", odi, len(events), vd)
    agreements = {}
    reference = gated.get("fingertip")
    if reference is not None:
        for site in sites:
            if site == "fingertip" or site not in gated:
                continue
            try:
                agr = compare_spo2(gated[site], reference)
            except (AlignmentError, InsufficientDataError) as exc:
                agreements[site] = ("error", str(exc))
                continue
            agreements[site] = (
                "ok",
                agr.bias,
                agr.a_rms,
                agr.acceptance_rate,
                agr.n_pairs,
                agr.n_ref_valid,
            )
    return record.subject_id, cells, agreements


def _site_scores_from_cells(site, records, cells_by_id) -> SiteScores:
    outcomes = []
    failures = []
    for rec in records:
        cell = cells_by_id[rec.subject_id][site]
        if cell[0] == "ok":
            outcomes.append(
                SubjectOutcome(rec.subject_id, rec.ahi_ref, cell[1], cell[2], cell[3])
            )
        else:
            failures.append((rec.subject_id, cell[1]))
    return SiteScores(site, tuple(outcomes), tuple(failures))


def _write_roc_csv(path, roc):
    with open(path, "w", newline="") as fh:
        fh.write("threshold,fpr,tpr\n")
        for thr, fpr, tpr in zip(roc.thresholds, roc.fpr, roc.tpr):
            fh.write(f"{thr:.6f},{fpr:.6f},{tpr:.6f}\n")


def _write_scatter_csv(path, scores: SiteScores):
    with open(path, "w", newline="") as fh:
        fh.write("subject_id,odi,ahi_ref\n")
        for o in scores.outcomes:
            fh.write(f"{o.subject_id},{o.odi:.6f},{o.ahi_ref:.6f}\n")


def cmd_cohort(args) -> int:
    cfg = _load_config(args.config)
    gate = _gate_config(args, cfg)
    detect = _detect_config(args, cfg)
    min_valid = _min_valid(args, cfg)
    raw_cutoffs = _pick(args.cutoffs, cfg, "cutoffs", "5,15,30")
    if isinstance(raw_cutoffs, str):
        cutoffs = _parse_float_list(raw_cutoffs, "--cutoffs")
    else:
        cutoffs = [float(c) for c in raw_cutoffs]
    if not cutoffs:
        raise DomainError("--cutoffs expects at least one number")
    jobs = args.jobs or 1
    if jobs < 1:
        raise DomainError(f"--jobs must be >= 1, got {jobs}")

    load = load_cohort(args.manifest, sample_period=_period(args, cfg))
    records = sorted(load.records, key=lambda r: r.subject_id)
    if len(records) < 2:
        raise InsufficientDataError(
            f"need at least two loadable subjects, got {len(records)}"
        )

    if args.site:
        sites = [s for s in SITES if s in args.site]
    elif "sites" in cfg:
        sites = [s for s in SITES if s in cfg["sites"]]
    else:
        present = set()
        for rec in records:
            present.update(rec.traces)
        sites = [s for s in SITES if s in present]
    if not sites:
        raise DomainError("no sites to evaluate")

    work = functools.partial(
        _subject_cells, sites=tuple(sites), gate=gate, detect=detect, min_valid=min_valid
    )
    if jobs == 1:
        results = [work(rec) for rec in records]
    else:
        chunk = max(1, len(records) // (jobs * 4))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, records, chunksize=chunk))
    results.sort(key=lambda item: item[0])
    cells_by_id = {sid: cells for sid, cells, _ in results}
    agreements_by_id = {sid: agr for sid, _, agr in results}

    subjects_section = []
    for rec in records:
        site_map = {}
        for site in sites:
            cell = cells_by_id[rec.subject_id][site]
            if cell[0] == "ok":
                site_map[site] = {
                    "odi": cell[1],
                    "n_events": cell[2],
                    "valid_duration_s": cell[3],
                }
            else:
                site_map[site] = {"error": cell[1]}
        subjects_section.append(
            {
                "id": rec.subject_id,
                "ahi_ref": rec.ahi_ref,
                "severity": severity_class(rec.ahi_ref).label,
                "sites": site_map,
            }
        )

    spo2_rows = []
    if "fingertip" in sites:
        for site in sites:
            if site == "fingertip":
                continue
            parts = []
            for rec in records:
                agr = agreements_by_id[rec.subject_id].get(site)
                if agr is not None and agr[0] == "ok":
                    parts.append(Spo2Agreement(*agr[1:]))
            if parts:
                pooled = pool_spo2(parts)
                spo2_rows.append(
                    {
                        "site": site,
                        "bias_pct": pooled.bias,
                        "a_rms_pct": pooled.a_rms,
                        "acceptance_rate_pct": pooled.acceptance_rate,
                        "n_pairs": pooled.n_pairs,
                        "n_subjects": len(parts),
                    }
                )
            else:
                spo2_rows.append({"site": site, "error": "no comparable subjects"})

    site_scores = {site: _site_scores_from_cells(site, records, cells_by_id) for site in sites}

    odi_rows = []
    if "fingertip" in sites:
        ref_odi = {
            o.subject_id: o.odi for o in site_scores["fingertip"].outcomes
        }
        for site in sites:
            if site == "fingertip":
                continue
            pairs = [
                (o.odi, ref_odi[o.subject_id])
                for o in site_scores[site].outcomes
                if o.subject_id in ref_odi
            ]
            if len(pairs) >= 2:
                ba = bland_altman([p[0] for p in pairs], [p[1] for p in pairs])
                odi_rows.append(
                    {
                        "site": site,
                        "n": ba.n,
                        "bias": ba.bias,
                        "sd": ba.sd,
                        "loa_low": ba.loa_low,
                        "loa_high": ba.loa_high,
                        "bias_ci_low": ba.bias_ci_low,
                        "bias_ci_high": ba.bias_ci_high,
                        "p_low": ba.p_low,
                        "p_high": ba.p_high,
                    }
                )
            else:
                odi_rows.append({"site": site, "error": "fewer than two paired subjects"})

    regression_rows = []
    for site in sites:
        fit = site_scores[site].fit()
        if fit is None:
            regression_rows.append({"site": site, "error": "no usable fit"})
        else:
            regression_rows.append(
                {
                    "site": site,
                    "n": fit.n,
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "r": fit.r,
                }
            )

    matrix = []
    healthy_cells = {}
    for cutoff in cutoffs:
        for site in sites:
            try:
                cell = screen_cell(site_scores[site], cutoff)
            except (InsufficientDataError, DegenerateInputError) as exc:
                matrix.append({"cutoff": cutoff, "site": site, "degenerate": str(exc)})
                continue
            healthy_cells[(cutoff, site)] = cell
            matrix.append(
                {
                    "cutoff": cutoff,
                    "site": site,
                    "n": cell.n,
                    "n_positive": cell.n_positive,
                    "auc": cell.roc.auc,
                    "odi_threshold": cell.threshold,
                    "sensitivity_pct": cell.metrics.sensitivity,
                    "specificity_pct": cell.metrics.specificity,
                    "accuracy_pct": cell.metrics.accuracy,
                }
            )
    if not healthy_cells:
        raise DegenerateInputError(
            "every screening cell is degenerate; nothing to report"
        )

    failures = [
        f"{f.subject_id} {f.site}: {f.message}" if f.site else f"{f.subject_id}: {f.message}"
        for f in load.failures
    ]
    for site in sites:
        for sid, msg in site_scores[site].failures:
            failures.append(f"{sid} {site}: {msg}")

    doc = {
        "schema": SCHEMA,
        "kind": "cohort",
        "config": {
            **_config_doc(gate, detect, min_valid),
            "cutoffs": cutoffs,
            "sites": sites,
        },
        "n_subjects_listed": len(load.records) + len(load.failures),
        "n_subjects_loaded": len(records),
        "subjects": subjects_section,
        "spo2_agreement": spo2_rows,
        "odi_agreement": odi_rows,
        "regression": regression_rows,
        "screening_matrix": matrix,
        "failures": sorted(failures),
    }
    text = _dump_report(doc)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "report.json"), "w") as fh:
            fh.write(text)
        for (cutoff, site), cell in sorted(healthy_cells.items()):
            _write_roc_csv(
                os.path.join(args.out_dir, f"roc_{site}_cutoff{cutoff:g}.csv"), cell.roc
            )
        for site in sites:
            _write_scatter_csv(
                os.path.join(args.out_dir, f"scatter_{site}.csv"), site_scores[site]
            )
        sys.stdout.write(os.path.join(args.out_dir, "report.json") + "\n")
    else:
        sys.stdout.write(text)
    return 0


# ------------------------------------------------------- calibrate / roc


def _read_scores_csv(path) -> list[LabeledScore]:
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        cols = tuple(c.strip() for c in header)
        if cols == ("subject_id", "score", "label"):
            with_id = True
        elif cols == ("score", "label"):
            with_id = False
        else:
            raise FormatError(
                f"{path}: expected header [subject_id,]score,label, got {','.join(header)!r}"
            )
        scores = []
        lineno = 1
        for row in reader:
            lineno += 1
            if len(row) != len(cols):
                raise ParseError(f"expected {len(cols)} fields, got {len(row)}", path, lineno)
            sid = row[0] if with_id else f"row{lineno}"
            raw_score = row[1] if with_id else row[0]
            raw_label = row[2] if with_id else row[1]
            try:
                score = float(raw_score)
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
            label_text = raw_label.strip().lower()
            if label_text in ("1", "true"):
                label = True
            elif label_text in ("0", "false"):
                label = False
            else:
                raise ParseError(f"label must be 0/1/true/false, got {raw_label!r}", path, lineno)
            try:
                scores.append(LabeledScore(sid, score, label))
            except DomainError as exc:
                raise ParseError(str(exc), path, lineno) from None
    if not scores:
        raise FormatError(f"{path}: no data rows")
    return scores


def cmd_calibrate(args) -> int:
    scores = _read_scores_csv(args.scores)
    threshold, metrics = select_threshold(scores)
    doc = {
        "schema": SCHEMA,
        "kind": "calibrate",
        "n": len(scores),
        "n_positive": sum(1 for s in scores if s.label),
        "threshold": threshold,
        "sensitivity_pct": metrics.sensitivity,
        "specificity_pct": metrics.specificity,
        "accuracy_pct": metrics.accuracy,
        "confusion": {"tp": metrics.tp, "fp": metrics.fp, "tn": metrics.tn, "fn": metrics.fn},
    }
    _emit(_dump_report(doc), args.out)
    return 0


def cmd_roc(args) -> int:
    scores = _read_scores_csv(args.scores)
    roc = roc_curve(scores)
    if args.points_csv:
        _write_roc_csv(args.points_csv, roc)
    doc = {
        "schema": SCHEMA,
        "kind": "roc",
        "n": len(scores),
        "n_positive": roc.n_positive,
        "n_negative": roc.n_negative,
        "auc": roc.auc,
        "points": [
            {"threshold": thr, "fpr": fpr, "tpr": tpr}
            for thr, fpr, tpr in zip(roc.thresholds, roc.fpr, roc.tpr)
        ],
    }
    _emit(_dump_report(doc), args.out)
    return 0


# ------------------------------------------------------------------ synth


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_subjects=args.n_subjects,
        seed=args.seed,
        duration=args.duration_h * 3600.0,
        sample_period=args.period_s,
        baseline_spo2=args.baseline,
        noise_sd=args.noise_sd,
        event_rate_range=tuple(_parse_float_pair(args.rate_range, "--rate-range")),
        depth_range=tuple(_parse_float_pair(args.depth_range, "--depth-range")),
        event_duration_range=tuple(_parse_float_pair(args.hold_range, "--hold-range")),
        ahi_jitter_sd=args.jitter_sd,
        site_profiles=DEFAULT_SITE_PROFILES,
    )
    paths = generate_cohort(spec, args.out_dir)
    doc = {
        "kind": "synth",
        "schema": SCHEMA,
        "n_subjects": spec.n_subjects,
        "seed": spec.seed,
        "manifest": paths.manifest,
        "ground_truth": paths.ground_truth,
    }
    sys.stdout.write(_dump_report(doc))
    return 0


def _parse_float_pair(text: str, flag: str) -> list[float]:
    values = _parse_float_list(text, flag)
    if len(values) != 2:
        raise DomainError(f"{flag} expects exactly two numbers, got {text!r}")
    return values


# ------------------------------------------------------------------ main


def _add_gate_detect_flags(p: argparse.ArgumentParser):
    p.add_argument("--qi-threshold", type=float, default=None,
                   help="quality gate threshold in [0,1] (default 0.5)")
    p.add_argument("--gap-bridge-s", type=float, default=None,
                   help="bridge MISSING runs up to this many seconds (default 0)")
    p.add_argument("--drop-pct", type=float, default=None,
                   help="minimum drop below baseline, percent (default 3.0)")
    p.add_argument("--min-dur-s", type=float, default=None,
                   help="events must last strictly longer than this (default 5)")
    p.add_argument("--recovery-frac", type=float, default=None,
                   help="fraction of the drop to regain before closing (default 1/3)")
    p.add_argument("--reset-gap-s", type=float, default=None,
                   help="MISSING runs longer than this reset the baseline (default 30)")
    p.add_argument("--max-event-dur-s", type=float, default=None,
                   help="force-close events after this many seconds (default 300)")
    p.add_argument("--min-valid-s", type=float, default=None,
                   help="minimum valid recording for a defined index (default 3600)")
    p.add_argument("--period-s", type=float, default=None,
                   help="sampling grid period in seconds (default 1.0)")
    p.add_argument("--config", default=None,
                   help="JSON or TOML file with defaults for the flags above")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="desatkit",
        description="Quality-gated SpO2 desaturation analysis and screening evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="detect events in one trace CSV")
    p.add_argument("trace", help="trace CSV (t_s,spo2_pct[,quality])")
    p.add_argument("--site", default=None, choices=SITES, help="label for the report")
    p.add_argument("--events-csv", default=None, help="also write detected events as CSV")
    p.add_argument("--out", default=None, help="write the JSON report here (default stdout)")
    _add_gate_detect_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("cohort", help="evaluate a whole cohort from a manifest")
    p.add_argument("manifest", help="cohort manifest JSON")
    p.add_argument("--cutoffs", default=None,
                   help="comma-separated severity cutoffs (default 5,15,30)")
    p.add_argument("--site", action="append", choices=SITES, default=None,
                   help="restrict to this site (repeatable; default all present)")
    p.add_argument("--out-dir", default=None,
                   help="write report.json and CSVs here (default: report to stdout)")
    p.add_argument("--jobs", type=int, default=None, help="parallel workers (default 1)")
    _add_gate_detect_flags(p)
    p.set_defaults(func=cmd_cohort)

    p = sub.add_parser("calibrate", help="pick a screening threshold from scores")
    p.add_argument("scores", help="CSV with header [subject_id,]score,label")
    p.add_argument("--out", default=None, help="write the JSON result here (default stdout)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("roc", help="ROC curve and AUC from scores")
    p.add_argument("scores", help="CSV with header [subject_id,]score,label")
    p.add_argument("--points-csv", default=None, help="also write threshold,fpr,tpr rows")
    p.add_argument("--out", default=None, help="write the JSON result here (default stdout)")
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("synth", help="generate a synthetic cohort with ground truth")
    p.add_argument("--out-dir", required=True, help="directory to write the cohort into")
    p.add_argument("--n-subjects", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration-h", type=float, default=8.0, help="recording length, hours")
    p.add_argument("--period-s", type=float, default=1.0)
    p.add_argument("--baseline", type=float, default=97.0, help="resting SpO2, percent")
    p.add_argument("--noise-sd", type=float, default=0.3)
    p.add_argument("--rate-range", default="0,30", help="events/h range, e.g. 0,30")
    p.add_argument("--depth-range", default="4,10", help="dip depth range, percent")
    p.add_argument("--hold-range", default="15,45", help="nadir hold range, seconds")
    p.add_argument("--jitter-sd", type=float, default=5.0,
                   help="sd linking reference AHI to the true event rate")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DesatkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 1


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
