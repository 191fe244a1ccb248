"""Exception hierarchy shared across the package."""


class WeaktagError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(WeaktagError):
    """Invalid user-supplied configuration (thresholds, weights, type lists)."""


class DataError(WeaktagError):
    """Malformed or inconsistent input data."""


class UnknownCategoryError(WeaktagError):
    """A category id was looked up that does not exist in the taxonomy."""


class ContractViolation(WeaktagError):
    """A caller broke an API precondition (e.g. sampling a non-UN position)."""


class CheckpointError(WeaktagError):
    """A model checkpoint is missing, corrupt, or inconsistent."""


class OptimizationError(WeaktagError):
    """The optimizer hit a non-finite gradient or otherwise cannot proceed."""
