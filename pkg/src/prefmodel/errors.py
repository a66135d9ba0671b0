"""Exception hierarchy shared by every stage of the pipeline."""


class PrefModelError(Exception):
    """Base class for all errors raised by prefmodel."""


class DomainError(PrefModelError, ValueError):
    """An argument lies outside its admissible domain."""


class SchemaError(PrefModelError):
    """A log is missing a required column."""

    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"missing required column: {column}")


class ParseError(PrefModelError):
    """A cell could not be converted to a number."""

    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column {column}: cannot parse {value!r} as a number")


class StructureError(PrefModelError):
    """Turn numbering is not contiguous from 1."""

    def __init__(self, turn, message=None):
        self.turn = turn
        super().__init__(message or f"turn sequence broken at turn {turn}")


class WindowError(PrefModelError):
    """A composite feature was requested for a turn without enough history."""


class PairingError(PrefModelError):
    """Player and opponent logs do not line up."""


class ModeError(PrefModelError):
    """Offline features requested from a log without outcome fields."""


class SplitError(PrefModelError):
    """A requested dataset split would be empty."""


class StratificationError(PrefModelError):
    """Too few matches to build the requested folds."""


class DegenerateClassError(PrefModelError):
    """Training data holds a single class where two are required."""


class WeakLearnerError(PrefModelError):
    """No weak hypothesis beats random guessing."""


class ConvergenceError(PrefModelError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class ContractError(PrefModelError):
    """Inputs violate an interface contract (fingerprints, confidence levels)."""


class SelectionError(PrefModelError):
    """A subset selection produced no data."""


class RankError(PrefModelError):
    """The regressor has no variance."""


class SampleSizeError(PrefModelError):
    """Too few points for the requested fit."""
