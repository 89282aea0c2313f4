"""Exception types shared across the package."""


class RshockError(Exception):
    """Base class for all package errors."""


class NonConvexInput(RshockError):
    """A field that must be discretely convex is not."""


class NonConvexState(RshockError):
    """A flow state lost convexity and could not be restored."""


class NonMonotoneT(RshockError):
    """A time/parameter list is not strictly increasing."""


class MaxIterations(RshockError):
    """An iterative solver exhausted its sweep budget."""


class StepUnderflow(RshockError):
    """Time step fell below dt_min after repeated rejections."""


class CflViolation(RshockError):
    """Explicit step size violates the stability bound."""


class PositivityLoss(RshockError):
    """A density that must stay positive went non-positive."""


class EmptySiteSet(RshockError):
    """A site list that must be non-empty is empty."""


class EmptySupport(RshockError):
    """Box counting needs a non-empty support mask."""


class UnknownBuiltin(RshockError):
    """Requested builtin Hamiltonian name is not registered."""
