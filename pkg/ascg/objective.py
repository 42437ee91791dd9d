"""Composite objectives ``f(x) = g(E x) + <b, x>`` and their constants."""
import logging
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigvalsh
from typing_extensions import Protocol

from .errors import (
    DimensionMismatch,
    MissingSmoothnessInfo,
    NonConvexGradNorm,
    NonFinite,
)
from .polyhedron import Polytope, diameter, diameter_of_image, random_point
from .util import as_matrix, as_vector, spawn_rngs


logger = logging.getLogger(__name__)


class InnerFunction(Protocol):
    """A strongly convex function ``g`` with a Lipschitz gradient."""

    dim: int
    sigma: float
    lipschitz: Optional[float]

    def value(self, y: np.ndarray) -> float:
        ...

    def gradient(self, y: np.ndarray) -> np.ndarray:
        ...


class QuadraticFunction:
    """``g(y) = y'Q y + c'y + r`` with symmetric positive definite ``Q``.

    >>> g = QuadraticFunction([[1.0, 0.0], [0.0, 2.0]], [0.0, 0.0])
    >>> g.sigma, g.lipschitz
    (2.0, 4.0)
    """

    __slots__ = ("Q", "c", "r", "dim", "sigma", "lipschitz")

    def __init__(self, Q, c, r: float = 0.0):
        Q = as_matrix(Q, name="Q")
        dim = Q.shape[0]
        if Q.shape != (dim, dim):
            raise DimensionMismatch(f"Q must be square, got shape {Q.shape}")
        if not np.allclose(Q, Q.T, atol=1e-12 * max(1.0, np.abs(Q).max())):
            raise ValueError("Q must be symmetric")
        eigs = eigvalsh(Q)
        if eigs[0] <= 0:
            raise ValueError(
                f"Q must be positive definite, smallest eigenvalue {eigs[0]}"
            )
        self.Q = Q
        self.c = as_vector(c, dim, "c")
        self.r = float(r)
        self.dim = dim
        self.sigma = 2.0 * float(eigs[0])
        self.lipschitz = 2.0 * float(eigs[-1])

    def value(self, y):
        return float(y @ self.Q @ y + self.c @ y + self.r)

    def gradient(self, y):
        return 2.0 * self.Q @ y + self.c

    def to_dict(self):
        return {
            "type": "quadratic",
            "Q": self.Q.tolist(),
            "c": self.c.tolist(),
            "r": self.r,
        }

    def __repr__(self):
        return f"QuadraticFunction(dim={self.dim}, sigma={self.sigma:.3g})"


class CallableFunction:
    """Wrap a value/gradient pair supplied by the caller."""

    __slots__ = ("_value", "_gradient", "dim", "sigma", "lipschitz")

    def __init__(
        self,
        value: Callable[[np.ndarray], float],
        gradient: Callable[[np.ndarray], np.ndarray],
        dim: int,
        sigma: float,
        lipschitz: Optional[float] = None,
    ):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self._value = value
        self._gradient = gradient
        self.dim = dim
        self.sigma = float(sigma)
        self.lipschitz = lipschitz

    def value(self, y):
        return float(self._value(y))

    def gradient(self, y):
        return np.asarray(self._gradient(y), dtype=float)

    def __repr__(self):
        return f"CallableFunction(dim={self.dim}, sigma={self.sigma:.3g})"


class CompositeObjective:
    """The objective ``f(x) = g(E x) + <b, x>`` over ``R^n``."""

    __slots__ = ("E", "b", "g", "n")

    def __init__(self, E, b, g: InnerFunction):
        E = as_matrix(E, name="E")
        if E.shape[0] != g.dim:
            raise DimensionMismatch(
                f"E has {E.shape[0]} rows but g is defined on R^{g.dim}"
            )
        self.E = E
        self.n = E.shape[1]
        self.b = as_vector(b, self.n, "b")
        self.g = g

    def value(self, x) -> float:
        x = as_vector(x, self.n, "point")
        v = self.g.value(self.E @ x) + float(self.b @ x)
        if not np.isfinite(v):
            raise NonFinite(f"objective is not finite at {x}")
        return v

    def gradient(self, x) -> np.ndarray:
        x = as_vector(x, self.n, "point")
        grad = self.E.T @ self.g.gradient(self.E @ x) + self.b
        if not np.all(np.isfinite(grad)):
            raise NonFinite(f"gradient is not finite at {x}")
        return grad

    def curvature(self, d: np.ndarray) -> Optional[float]:
        """Return ``(E d)'Q(E d)`` for quadratic ``g``, else None."""
        if not isinstance(self.g, QuadraticFunction):
            return None
        Ed = self.E @ d
        return float(Ed @ self.g.Q @ Ed)

    def lipschitz_rho(self) -> float:
        """Return a Lipschitz constant of the gradient of ``f``.

        For quadratic ``g`` this is ``2 lambda_max(E'Q E)``; otherwise
        ``L_g |E|_2^2``.
        """
        if not np.any(self.E):
            return 0.0
        if isinstance(self.g, QuadraticFunction):
            M = self.E.T @ self.g.Q @ self.E
            return max(2.0 * float(eigvalsh((M + M.T) / 2)[-1]), 0.0)
        if self.g.lipschitz is None:
            raise MissingSmoothnessInfo(
                "g has no Lipschitz constant and is not quadratic"
            )
        return float(self.g.lipschitz) * float(np.linalg.norm(self.E, 2)) ** 2

    def to_dict(self):
        if not isinstance(self.g, QuadraticFunction):
            raise TypeError("only quadratic inner functions are serializable")
        return {"E": self.E.tolist(), "b": self.b.tolist(), "g": self.g.to_dict()}

    def __repr__(self):
        return f"CompositeObjective(n={self.n}, g={self.g!r})"


def objective_from_dict(data: dict) -> CompositeObjective:
    g = data["g"]
    if g.get("type") != "quadratic":
        raise ValueError(f"unsupported inner function type {g.get('type')!r}")
    return CompositeObjective(
        data["E"], data["b"], QuadraticFunction(g["Q"], g["c"], g.get("r", 0.0))
    )


@dataclass(frozen=True)
class ProblemConstants:
    rho: float
    G: float
    D: float
    D_E: float
    C: float
    sigma_g: float
    b_norm: float
    G_exact: bool = True


def problem_constants(obj: CompositeObjective, p: Polytope) -> ProblemConstants:
    """Compute ρ, G, D, D_E and C for `obj` over `p`.

    ``G`` is the largest gradient norm of ``g`` over the vertex images, which
    is exact when that norm is convex (always for quadratic ``g``).
    """
    if obj.n != p.n:
        raise DimensionMismatch(f"objective is on R^{obj.n}, polytope on R^{p.n}")

    images = p.vertices @ obj.E.T
    if isinstance(obj.g, QuadraticFunction):
        grads = 2.0 * images @ obj.g.Q + obj.g.c
        G_exact = True
    else:
        grads = np.array([obj.g.gradient(y) for y in images])
        G_exact = False
        warnings.warn(
            "G is the maximum over vertices only; it is a lower estimate unless "
            "the gradient norm of g is convex",
            NonConvexGradNorm,
        )
    G = float(np.linalg.norm(grads, axis=1).max())
    D = diameter(p)
    D_E = diameter_of_image(p, obj.E)
    b_norm = float(np.linalg.norm(obj.b))
    return ProblemConstants(
        rho=obj.lipschitz_rho(),
        G=G,
        D=D,
        D_E=D_E,
        C=G * D_E + b_norm * D,
        sigma_g=obj.g.sigma,
        b_norm=b_norm,
        G_exact=G_exact,
    )


@dataclass
class InequalityReport:
    pairs: int
    violations: int
    max_excess: float

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _point_pairs(p, pairs, seed):
    rng = spawn_rngs(seed, 1)[0]
    for _ in range(pairs):
        yield random_point(p, rng), random_point(p, rng)


def check_descent_lemma(
    obj: CompositeObjective, p: Polytope, pairs: int = 100, seed=0, tol=1e-9
) -> InequalityReport:
    """Check ``f(y) <= f(x) + <grad f(x), y - x> + rho/2 |y - x|^2`` on samples."""
    rho = obj.lipschitz_rho()
    report = InequalityReport(pairs, 0, -np.inf)
    for x, y in _point_pairs(p, pairs, seed):
        d = y - x
        bound = obj.value(x) + obj.gradient(x) @ d + rho / 2 * (d @ d)
        excess = obj.value(y) - bound
        report.max_excess = max(report.max_excess, float(excess))
        if excess > tol * (1.0 + abs(bound)):
            report.violations += 1
    return report


def check_strong_convexity(
    obj: CompositeObjective, p: Polytope, pairs: int = 100, seed=0, tol=1e-9
) -> InequalityReport:
    """Check ``f(y) >= f(x) + <grad f(x), y - x> + sigma/2 |E(y - x)|^2``."""
    sigma = obj.g.sigma
    report = InequalityReport(pairs, 0, -np.inf)
    for x, y in _point_pairs(p, pairs, seed):
        d = y - x
        Ed = obj.E @ d
        bound = obj.value(x) + obj.gradient(x) @ d + sigma / 2 * (Ed @ Ed)
        excess = bound - obj.value(y)
        report.max_excess = max(report.max_excess, float(excess))
        if excess > tol * (1.0 + abs(bound)):
            report.violations += 1
    return report
