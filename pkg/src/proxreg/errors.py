"""Exception types raised across the package."""


class ProxRegError(Exception):
    """Base class for all package errors."""


class ChartError(ProxRegError, ValueError):
    """A point (or a trajectory) left the coordinate chart of its manifold."""


class BasePointError(ProxRegError, ValueError):
    """Tangent vectors attached to different base points were combined."""


class PreconditionError(ProxRegError, ValueError):
    """An operation was called outside the region where it is defined."""


class ExpressionError(ProxRegError, ValueError):
    """A boundary expression could not be parsed or evaluated."""


class SubmersionError(ProxRegError, ValueError):
    """The boundary function has a vanishing gradient where one is required."""


class ConvergenceError(ProxRegError, RuntimeError):
    """An iterative solver stopped without meeting its tolerance."""


class AmbiguousProjectionError(ProxRegError, RuntimeError):
    """A projection that had to be unique returned several minimizers."""


class InfeasibleVariationError(ProxRegError, ValueError):
    """A variation pushed a curve node outside the set."""


class QuadraticGrowthError(ProxRegError, ValueError):
    """Sampled data contradicts the quadratic growth assumption."""
