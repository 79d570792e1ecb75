"""Exception hierarchy shared by every module."""


class DimwitError(Exception):
    """Base class for all library errors."""


class ValidationError(DimwitError, ValueError):
    """Malformed input data. ``location`` points at the offending entry, if any."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class ResourceGuardError(DimwitError):
    """An instance exceeds a configured size guard."""

    def __init__(self, message, limit=None, requested=None):
        super().__init__(message)
        self.limit = limit
        self.requested = requested


class SolverError(DimwitError):
    """A numerical routine failed to produce a verifiable answer."""
