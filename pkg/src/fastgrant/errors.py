"""Exception taxonomy shared across the package and mapped to CLI exit codes."""


class FastgrantError(Exception):
    """Base class for all package errors."""


class SpecificationError(FastgrantError, ValueError):
    """A network spec violates its invariants."""


class ShapeError(FastgrantError, ValueError):
    """Array arguments have incompatible or unexpected shapes."""


class InsufficientDataError(FastgrantError, ValueError):
    """A series is too short for the requested estimator order."""


class StateError(FastgrantError, RuntimeError):
    """An operation was called with stale or missing internal state."""


class TuningError(FastgrantError, RuntimeError):
    """Hyperparameter search could not produce any completed trial."""


class NumericError(FastgrantError, ArithmeticError):
    """Training or evaluation produced non-finite numbers."""
