"""Exception hierarchy.

Every error raised on purpose by the library derives from ``LavgapError``;
the CLI maps ``ParameterError`` to exit code 1 and ``BoundViolation`` to 2.
"""


class LavgapError(Exception):
    pass


class ParameterError(LavgapError, ValueError):
    """Input outside the admissible range of an operation."""


class ResourceError(LavgapError):
    """Requested discretisation exceeds the configured budget."""


class GeometryError(LavgapError):
    """Degenerate mesh cell or inconsistent geometry."""


class EvaluationError(LavgapError, FloatingPointError):
    """Non-finite value met while evaluating an integrand."""


class DivergenceError(LavgapError, ArithmeticError):
    """Integral is infinite (non-integrable power singularity)."""


class QuadratureError(LavgapError):
    """Adaptive quadrature did not reach the requested tolerance."""


class InvalidWeightError(ParameterError):
    pass


class InvalidModulusError(ParameterError):
    pass


class PreconditionError(LavgapError):
    """A hypothesis of the experiment is not met."""


class BoundViolation(LavgapError, AssertionError):
    """A computed energy undercuts a proven lower bound."""
