"""Exception hierarchy shared across the QC engine.

Every failure mode callers are expected to branch on gets its own class;
anything else surfaces as a plain QcError. Degenerate inputs (zero baseline
mean, zero variance, empty denominators) raise loudly instead of passing
silently.
"""


class QcError(Exception):
    """Base class for all engine errors."""


# --- dataset / storage ---------------------------------------------------

class FileMissing(QcError):
    """Input file does not exist at the resolved path."""


class ParseError(QcError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class RaggedRow(ParseError):
    """CSV row width disagrees with the header."""


class IoError(QcError):
    """Write-side failure (unwritable directory, backend refusal)."""


class UnknownColumn(QcError):
    pass


class UnboundPlaceholder(QcError):
    """Path template references a placeholder with no binding."""


# --- rules engine ---------------------------------------------------------

class MissingPreviousDay(QcError):
    """Day-over-day rule evaluated without a previous dataset."""


class DegenerateBaseline(QcError):
    """Yesterday's mean is zero; percentage change is undefined."""


class DegenerateCorrelation(QcError):
    """Fewer than 3 joint pairs, or zero variance on one side."""


class EmptySuite(QcError):
    pass


# --- statistical outliers --------------------------------------------------

class EmptyHistory(QcError):
    pass


class TooFewValues(QcError):
    pass


# --- ml qc ------------------------------------------------------------------

class TooFewRows(QcError):
    pass


class SingleClassLabels(QcError):
    pass


class EmptyBattery(QcError):
    pass


class ShapeMismatch(QcError):
    """Scoring input feature count differs from training."""


class EmptyScores(QcError):
    pass


class MissingLabels(QcError):
    pass


class EmptySequence(QcError):
    pass


class RankTooLarge(QcError):
    pass


class EmptyGrid(QcError):
    pass


class LengthMismatch(QcError):
    pass


# --- imputation --------------------------------------------------------------

class AllNullColumn(QcError):
    pass


class TooFewObserved(QcError):
    pass


class EmptyRowOrColumn(QcError):
    """Matrix completion requires at least one observed entry per row and column."""


# --- governance ----------------------------------------------------------------

class UnknownRule(QcError):
    pass


class UnknownBreach(QcError):
    pass


class AlreadyResolvedConflict(QcError):
    """Breach already closed with a different resolution."""


class UnknownRun(QcError):
    pass


class CorruptCheckpoint(QcError):
    pass


# --- runner / config --------------------------------------------------------------

class UnknownSpec(QcError):
    pass


class SchemaError(QcError):
    """Config failed structural validation; carries every violation at once."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("config validation failed:\n  " + "\n  ".join(self.violations))
