"""Exception hierarchy shared across the package."""


class HeatInvError(Exception):
    """Base class for all package errors."""


class DomainError(HeatInvError, ValueError):
    """An argument lies outside its mathematical domain."""


class DataError(HeatInvError, ValueError):
    """Input data violate a structural requirement (non-finite values,
    mismatched grids, series too short for a stencil)."""


class GridMismatchError(DataError):
    """Two grid functions do not share the same time grid."""


class PreconditionError(HeatInvError, ValueError):
    """A documented operation precondition is not met."""


class ScheduleError(HeatInvError, ValueError):
    """A peeling schedule is inconsistent with the data grid."""


class ConfigError(HeatInvError, ValueError):
    """An experiment configuration failed strict validation."""


class ParseError(HeatInvError, ValueError):
    """A data file could not be parsed.

    Carries the 1-based line number when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InversionError(HeatInvError, RuntimeError):
    """A reconstruction stage failed; carries the stage name and payload."""

    def __init__(self, stage: str, message: str, payload: dict | None = None):
        self.stage = stage
        self.payload = payload or {}
        super().__init__(f"stage '{stage}': {message}")
