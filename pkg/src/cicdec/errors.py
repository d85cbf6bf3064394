"""Exception hierarchy shared by every module."""


class CicdecError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CicdecError, ValueError):
    """Invalid parameters: width mismatch, bad filter spec, unknown kind."""


class InputDomainError(CicdecError, ValueError):
    """A sample lies outside the range its stage accepts."""

    def __init__(self, message, stage=None, index=None):
        self.stage = stage
        self.index = index
        if stage is not None:
            message = f"[{stage}] {message}"
        super().__init__(message)


class DesignError(CicdecError, RuntimeError):
    """A filter specification could not be met.

    ``achieved`` carries the best numbers reached so callers can report
    them next to the requested targets.
    """

    def __init__(self, message, achieved=None, stage=None):
        self.achieved = dict(achieved or {})
        self.stage = stage
        if stage is not None:
            message = f"[{stage}] {message}"
        super().__init__(message)


class DataFormatError(CicdecError, ValueError):
    """Malformed sample file; ``location`` is a line number or byte offset."""

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(message)
