"""Exception types shared across the simulator."""


class MrlsError(Exception):
    """Base class for simulator errors."""


class InvalidArgumentError(MrlsError, ValueError):
    """An argument violates an operation's preconditions."""


class GeometryError(MrlsError):
    """Array placement or field-point geometry is outside the model's validity."""


class ConfigError(MrlsError):
    """A scenario or sweep configuration failed validation."""


class DegenerateGridError(MrlsError):
    """A field grid cannot be normalized (all values zero)."""


class UndefinedEfficiencyError(MrlsError):
    """Transmission efficiency is undefined (no transmit power or collapsed run)."""


class UnresolvedSourcesError(MrlsError):
    """Fewer spectrum peaks were found than requested sources.

    Carries the peaks that were found so callers can report partial results.
    """

    def __init__(self, requested: int, found):
        self.requested = requested
        self.found = list(found)
        super().__init__(
            f"requested {requested} spectrum peaks but only found {len(self.found)}: "
            f"{self.found}"
        )
