"""Quality-gated SpO2 desaturation analysis.

Pipeline in one line: trace CSVs -> quality gate -> desaturation events ->
per-hour index -> cross-site agreement and cutoff screening, with a
synthetic cohort generator whose ground truth exercises every stage.
"""

from .core import (
    MISSING,
    SEVERITY_CUTOFFS,
    SITES,
    AnalysisResult,
    DesatEvent,
    SampledTrace,
    SeverityClass,
    SubjectRecord,
    severity_class,
)
from .desat import (
    DEFAULT_MIN_VALID_DURATION_S,
    DetectConfig,
    analyze_trace,
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
from .ingest import (
    CohortLoad,
    LoadFailure,
    ManifestEntry,
    load_cohort,
    load_manifest,
    parse_trace_csv,
    write_trace_csv,
)
from .screening import (
    ClassificationMetrics,
    CohortSiteReport,
    LabeledScore,
    RocCurve,
    ScreeningCell,
    SiteScores,
    SubjectOutcome,
    evaluate_at,
    evaluate_cohort,
    roc_curve,
    score_site,
    screen_cell,
    select_threshold,
)
from .stats import (
    BlandAltman,
    LinFit,
    Spo2Agreement,
    bland_altman,
    compare_spo2,
    linear_fit,
    pool_spo2,
)
from .synth import (
    DEFAULT_SITE_PROFILES,
    CohortPaths,
    ScheduledDip,
    SiteDegradation,
    SubjectTruth,
    SynthSpec,
    degrade_trace,
    generate_cohort,
    generate_subject,
    generate_trace,
)

__version__ = "0.1.0"

__all__ = [
    "MISSING",
    "SEVERITY_CUTOFFS",
    "SITES",
    "AnalysisResult",
    "DesatEvent",
    "SampledTrace",
    "SeverityClass",
    "SubjectRecord",
    "severity_class",
    "DEFAULT_MIN_VALID_DURATION_S",
    "DetectConfig",
    "analyze_trace",
    "compute_odi",
    "detect_desaturations",
    "write_events_csv",
    "AlignmentError",
    "DegenerateFitError",
    "DegenerateInputError",
    "DesatkitError",
    "DomainError",
    "FormatError",
    "InsufficientDataError",
    "ManifestError",
    "ParseError",
    "SynthSpecError",
    "UndefinedOdi",
    "GateConfig",
    "apply_gate",
    "valid_duration",
    "CohortLoad",
    "LoadFailure",
    "ManifestEntry",
    "load_cohort",
    "load_manifest",
    "parse_trace_csv",
    "write_trace_csv",
    "ClassificationMetrics",
    "LabeledScore",
    "RocCurve",
    "CohortSiteReport",
    "ScreeningCell",
    "SiteScores",
    "SubjectOutcome",
    "evaluate_at",
    "evaluate_cohort",
    "roc_curve",
    "score_site",
    "screen_cell",
    "select_threshold",
    "BlandAltman",
    "LinFit",
    "Spo2Agreement",
    "bland_altman",
    "compare_spo2",
    "linear_fit",
    "pool_spo2",
    "DEFAULT_SITE_PROFILES",
    "CohortPaths",
    "ScheduledDip",
    "SiteDegradation",
    "SubjectTruth",
    "SynthSpec",
    "degrade_trace",
    "generate_cohort",
    "generate_subject",
    "generate_trace",
    "__version__",
]
