"""Exception hierarchy for the desatkit pipeline.

Everything raised deliberately by this package derives from
:class:`DesatkitError`, so callers can catch one base class. The CLI maps
subfamilies onto exit codes: input problems (parsing, format, manifest,
alignment, domain violations) versus data that is simply too thin or too
one-sided to analyze (insufficient, degenerate, undefined index).
"""


class DesatkitError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(DesatkitError, ValueError):
    """A value violates a domain invariant (range, sign, shape)."""


class ParseError(DesatkitError):
    """A trace file could not be parsed.

    Attributes:
        path: file the error occurred in, or None for in-memory input.
        line: 1-based line number, counting the header as line 1.
    """

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class FormatError(DesatkitError):
    """A file violates its expected layout (header, ordering, emptiness)."""


class ManifestError(DesatkitError):
    """A cohort manifest is structurally invalid."""


class AlignmentError(DesatkitError):
    """Two traces are not on the same sampling grid."""


class InsufficientDataError(DesatkitError):
    """Not enough usable data to compute the requested statistic."""


class DegenerateInputError(DesatkitError):
    """Classifier input contains only one class."""


class DegenerateFitError(DesatkitError):
    """Regression input has zero variance along x."""


class UndefinedOdi(DesatkitError):
    """Valid recording time is below the minimum analyzable duration."""

    def __init__(self, valid_duration: float, minimum: float):
        self.valid_duration = float(valid_duration)
        self.minimum = float(minimum)
        super().__init__(
            f"index undefined: {self.valid_duration:.1f} s of valid data "
            f"(minimum {self.minimum:.1f} s)"
        )


class SynthSpecError(DesatkitError):
    """A synthetic cohort specification cannot be realized."""
