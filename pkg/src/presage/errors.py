"""Exception hierarchy shared by all presage modules."""


class PresageError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PresageError, ValueError):
    """A configuration object violates its invariants."""


class DataError(PresageError, ValueError):
    """Input data is malformed, non-finite, or otherwise unusable."""


class OrderingError(DataError):
    """Timestamps or records arrived out of order."""


class StateError(PresageError, RuntimeError):
    """An operation was invoked in a state where it is undefined."""


class DatasetKeyError(PresageError, LookupError):
    """A requested dataset key is absent from a label map."""
