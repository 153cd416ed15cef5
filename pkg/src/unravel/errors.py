"""Exception hierarchy shared across the package.

Two broad classes matter to callers: validation errors (bad parameters,
mismatched shapes, inadequate input data) and numerical errors raised
mid-computation (step failures, truncation breaches, divergence).  The
command-line driver maps them to distinct exit codes.
"""


class UnravelError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(UnravelError, ValueError):
    """Invalid parameters or inputs, detected before or during setup."""


class ShapeError(ValidationError):
    """Dimension mismatch between states and operators."""


class ConfigurationError(ValidationError):
    """A run configuration that cannot be executed as requested."""


class GapError(ValidationError):
    """Samples too sparse to cover every requested strobe time."""


class NumericalError(UnravelError, RuntimeError):
    """Numerical failure during integration."""


class StepFailureError(NumericalError):
    """A stochastic step collapsed the state norm; reduce the step size."""


class StepSizeError(NumericalError):
    """Per-step jump probability too large for the splitting to be valid."""


class DivergenceError(NumericalError):
    """Classical integration produced a non-finite state."""

    def __init__(self, t: float):
        self.t = t
        super().__init__(t)

    def __str__(self):
        return f"state became non-finite at t={self.t:g}"


class TruncationBreachError(NumericalError):
    """Probability leaked into the top of the truncated basis."""

    def __init__(self, t: float, population: float):
        self.t = t
        self.population = population
        super().__init__(t, population)

    def __str__(self):
        return (f"boundary population {self.population:.3e} exceeded 1e-3 at t={self.t:g}; "
                "raise the basis dimension or lower dt")
