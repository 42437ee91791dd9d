"""Exceptions and warnings raised by `ascg`."""


class ASCGError(Exception):
    """Base class for every error raised by this package."""


class InvalidConfig(ASCGError, ValueError):
    pass


class UsageError(ASCGError):
    pass


class DimensionMismatch(ASCGError, ValueError):
    pass


class NonFinite(ASCGError, ValueError):
    pass


# Polytope construction and geometry
class UnboundedSet(ASCGError):
    pass


class EmptySet(ASCGError):
    pass


class DimensionCapExceeded(ASCGError):
    pass


class TooManyVertices(DimensionCapExceeded):
    pass


class InfeasiblePoint(ASCGError):
    pass


class DegeneratePolytope(ASCGError):
    pass


# Objective
class MissingSmoothnessInfo(ASCGError):
    pass


class NonConvexGradNorm(UserWarning):
    """The gradient-norm constant was not computed exactly over the vertices."""


# Solver
class StallDetected(ASCGError):
    """The objective increased between consecutive iterates."""

    def __init__(self, iteration, previous, current):
        self.iteration = iteration
        self.previous = previous
        self.current = current
        super().__init__(
            f"objective increased at iteration {iteration}: {previous!r} -> {current!r}"
        )


class SingletonAway(ASCGError):
    pass


class ZeroDirection(ASCGError):
    pass


class AscentDirection(ASCGError):
    pass


class InvalidRepresentation(ASCGError):
    pass


# Incremental reduction
class InconsistentState(ASCGError):
    pass


class SingularSolve(ASCGError):
    pass


# Certificates
class TooManyRows(ASCGError):
    pass


class BoundViolated(ASCGError):
    """A trace value exceeded the certified linear-rate bound."""

    def __init__(self, iteration, value, bound):
        self.iteration = iteration
        self.value = value
        self.bound = bound
        super().__init__(
            f"bound violated at iteration {iteration}: {value!r} > {bound!r}"
        )


class CertificateScopeError(ASCGError):
    pass


class NonUniqueOptimum(ASCGError):
    pass


class PremiseSamplingFailed(ASCGError):
    pass
