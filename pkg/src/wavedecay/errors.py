"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems exit 2, numeric
failures exit 3, unmet theorem hypotheses exit 4.
"""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class DegenerateInputError(ValueError):
    """Input is identically zero where a non-zero state is required."""


class RangeError(ValueError):
    """A value lies outside the attainable range of a monotone function."""

    def __init__(self, message, lo=None, hi=None):
        super().__init__(message)
        self.lo = lo
        self.hi = hi


class NumericFailureError(RuntimeError):
    """A numerical procedure (linear solve, Newton iteration) failed."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class HypothesisUnmetError(RuntimeError):
    """A theorem pipeline was invoked on data violating its hypothesis."""


class EmptyWindowError(RuntimeError):
    """A fit window contains no usable samples."""


class ConstructionError(RuntimeError):
    """A synthetic generator found an empty feasible set."""


class InvalidDampingError(ValueError):
    """A damping nonlinearity violates monotonicity or sign conditions."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ConfigError(ValueError):
    """An experiment configuration failed validation."""
