"""Figure rendering for the resonant-beam simulator's CSV/JSON outputs."""

__version__ = "0.1.0"


class PlotsError(Exception):
    """Base class for rendering errors."""


class SchemaError(PlotsError):
    """An input file does not match its documented CSV schema."""


class HashMismatchError(PlotsError):
    """Input files carry mutually inconsistent config hashes."""
