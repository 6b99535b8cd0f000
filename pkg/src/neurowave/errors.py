"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError/FormatError -> 2,
DataError -> 3, NumericalError -> 4.
"""


class NeurowaveError(Exception):
    """Base class for all package errors."""


class ConfigError(NeurowaveError):
    """Invalid configuration value or malformed config file."""


class FormatError(NeurowaveError):
    """Malformed or unsupported on-disk artifact."""


class DataError(NeurowaveError):
    """Input data violates a precondition (missing channels, single-class sets, ...)."""


class NumericalError(NeurowaveError):
    """A numerical procedure failed (non-convergence, NaN loss, ...)."""


class IcaConvergenceError(NumericalError):
    """FastICA did not converge within the iteration budget."""

    def __init__(self, iterations: int, tolerance: float, last_change: float):
        self.iterations = iterations
        self.tolerance = tolerance
        self.last_change = last_change
        super().__init__(
            f"ICA did not converge after {iterations} iterations "
            f"(last change {last_change:.3e}, tolerance {tolerance:.3e})"
        )
