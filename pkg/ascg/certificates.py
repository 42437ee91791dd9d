"""Linear-rate certificates for ASCG and randomized checks of their premises.

The rate constant is assembled from the Hoffman constant θ of the stacked
matrix ``[A; E; b']``, the error-bound constant κ, the vertex-facet distance
Ω and the representation bound N::

    kappa = theta^2 (|b| D + 3 G D_E + 2 (G^2 + 1) / sigma_g)
    alpha = min(Omega^2 / (8 rho kappa D^2 N^2), 1/2)

and the certified bound is ``f(x^k) - f* <= C (1 - alpha)^((k - 1) / 2)``.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import List, Optional

import numpy as np
from scipy.linalg import eigvalsh, null_space
from toolz import take
from typing_extensions import Literal

from .errors import (
    BoundViolated,
    CertificateScopeError,
    NonUniqueOptimum,
    PremiseSamplingFailed,
    TooManyRows,
)
from .objective import CompositeObjective, problem_constants
from .oracle import vertex_oracle
from .polyhedron import (
    Polytope,
    active_set_of_union,
    geometric_constants,
    random_point,
)
from .solver import Reduction, Representation, SolverConfig, SolverTrace, ascg_run
from .util import as_matrix, spawn_rngs


logger = logging.getLogger(__name__)

HOFFMAN_ROW_CAP = 18
BOUND_SLACK = 1e-9

HoffmanVariant = Literal["squared", "classical"]


def stacked_matrix(obj: CompositeObjective, p: Polytope) -> np.ndarray:
    """Return ``[A; E; b']``."""
    return np.vstack([p.A, obj.E, obj.b[None, :]])


def hoffman_theta(
    M, variant: HoffmanVariant = "squared", max_rows: int = HOFFMAN_ROW_CAP
) -> float:
    """Compute θ as the maximum of ``1 / lambda_min(B B')`` over row subsets.

    Only linearly independent subsets of rows ``B`` of `M` count.  The
    ``"classical"`` variant uses ``1 / sqrt(lambda_min)`` instead.

    >>> hoffman_theta([[2.0, 0.0], [0.0, 2.0]])
    0.25
    >>> hoffman_theta([[2.0, 0.0], [0.0, 2.0]], variant="classical")
    0.5
    """
    M = as_matrix(M, name="M")
    m = M.shape[0]
    if m > max_rows:
        raise TooManyRows(f"{m} rows exceed the enumeration cap of {max_rows}")
    if variant not in ("squared", "classical"):
        raise ValueError(f"unknown Hoffman variant {variant!r}")

    rank = np.linalg.matrix_rank(M) if m else 0
    smallest = math.inf
    for size in range(1, rank + 1):
        for rows in combinations(range(m), size):
            B = M[list(rows)]
            if np.linalg.matrix_rank(B) < size:
                continue
            smallest = min(smallest, float(eigvalsh(B @ B.T)[0]))

    if smallest is math.inf:
        return 0.0
    return 1.0 / smallest if variant == "squared" else 1.0 / math.sqrt(smallest)


def error_bound_kappa(theta, b_norm, D, G, D_E, sigma_g) -> float:
    return theta ** 2 * (b_norm * D + 3.0 * G * D_E + 2.0 * (G ** 2 + 1.0) / sigma_g)


def alpha_dagger(omega, rho, kappa, D, N) -> float:
    """Return ``min(Omega^2 / (8 rho kappa D^2 N^2), 1/2)``.

    >>> alpha_dagger(1.0, 2.0, 1.0, 1.0, 4)
    0.00390625
    """
    denominator = 8.0 * rho * kappa * D ** 2 * N ** 2
    if denominator == 0:
        return 0.5
    return min(omega ** 2 / denominator, 0.5)


@dataclass(frozen=True)
class RateCertificate:
    theta: float
    kappa: float
    omega: float
    zeta: float
    phi: float
    N: int
    rho: float
    D: float
    D_E: float
    G: float
    C: float
    sigma_g: float
    b_norm: float
    alpha: float

    @property
    def contraction(self) -> float:
        """The certified per-iteration factor ``sqrt(1 - alpha)``."""
        return math.sqrt(1.0 - self.alpha)

    def bound(self, k: int) -> float:
        return self.C * (1.0 - self.alpha) ** ((k - 1) / 2)


def representation_bound(p: Polytope, reduction) -> int:
    """Return N: ``|V|`` without reduction, ``n + 1`` with it."""
    return p.vertex_count if Reduction(reduction) is Reduction.TRIVIAL else p.n + 1


def rate_certificate(
    obj: CompositeObjective,
    p: Polytope,
    reduction=Reduction.CARATHEODORY,
    variant: HoffmanVariant = "squared",
    prune_redundant_rows: bool = False,
) -> RateCertificate:
    """Assemble the linear-rate certificate of ASCG on `obj` over `p`."""
    geo = geometric_constants(p, prune_redundant_rows)
    pc = problem_constants(obj, p)
    theta = hoffman_theta(stacked_matrix(obj, p), variant)
    kappa = error_bound_kappa(theta, pc.b_norm, pc.D, pc.G, pc.D_E, pc.sigma_g)
    N = representation_bound(p, reduction)
    alpha = alpha_dagger(geo.omega, pc.rho, kappa, pc.D, N)
    logger.info("certificate: theta=%.4g kappa=%.4g alpha=%.4g", theta, kappa, alpha)
    return RateCertificate(
        theta=theta,
        kappa=kappa,
        omega=geo.omega,
        zeta=geo.zeta,
        phi=geo.phi,
        N=N,
        rho=pc.rho,
        D=pc.D,
        D_E=pc.D_E,
        G=pc.G,
        C=pc.C,
        sigma_g=pc.sigma_g,
        b_norm=pc.b_norm,
        alpha=alpha,
    )


def predicted_iterations(cert: RateCertificate, eps: float) -> float:
    """Return the first k at which the certified bound falls below `eps`."""
    if cert.C <= eps:
        return 1
    if cert.alpha <= 0:
        return math.inf
    return 1 + math.ceil(2.0 * math.log(eps / cert.C) / math.log(1.0 - cert.alpha))


@dataclass(frozen=True)
class SolutionCertificate:
    """A high-accuracy optimum with its image ``t* = E x*``, ``s* = <b, x*>``."""

    x_star: np.ndarray
    f_star: float
    t_star: np.ndarray
    s_star: float
    gap: float
    trace: SolverTrace = field(repr=False)


def solution_certificate(
    obj: CompositeObjective, p: Polytope, cfg: Optional[SolverConfig] = None
) -> SolutionCertificate:
    """Run ASCG to a gap of ``1e-12`` with ten times the iteration budget."""
    cfg = cfg or SolverConfig()
    cfg = replace(cfg, gap_tolerance=1e-12, max_iters=10 * cfg.max_iters)
    trace = ascg_run(obj, p, cfg)
    x = trace.point
    return SolutionCertificate(
        x_star=x,
        f_star=obj.value(x),
        t_star=obj.E @ x,
        s_star=float(obj.b @ x),
        gap=trace.final.fw_gap,
        trace=trace,
    )


@dataclass
class RateReport:
    checked: int
    empirical_contraction: Optional[float]
    certified_contraction: float


def check_rate_bound(
    trace: SolverTrace, cert: RateCertificate, f_star: float, slack: float = BOUND_SLACK
) -> RateReport:
    """Check every iterate of an ASCG trace against the certified bound.

    Raises `BoundViolated` at the first offending iteration.
    """
    if trace.algorithm != "ascg":
        raise CertificateScopeError(
            f"the certificate covers ASCG only, not {trace.algorithm!r}"
        )
    errors = []
    for r in trace.records:
        excess = r.f_value - f_star
        bound = cert.bound(r.iteration)
        if excess > bound + slack * max(1.0, cert.C):
            raise BoundViolated(r.iteration, excess, bound)
        errors.append((r.iteration, excess))

    positive = [(k, e) for k, e in errors if e > 1e-14]
    empirical = None
    if len(positive) >= 2 and positive[-1][0] > positive[0][0]:
        (k0, e0), (k1, e1) = positive[0], positive[-1]
        empirical = (e1 / e0) ** (1.0 / (k1 - k0))
    return RateReport(len(errors), empirical, cert.contraction)


@dataclass
class ErrorBoundReport:
    samples: int
    failures: int
    kappa: float
    empirical_kappa: float

    @property
    def ok(self) -> bool:
        return self.failures == 0


def check_error_bound(
    obj: CompositeObjective,
    p: Polytope,
    x_star,
    kappa: float,
    samples: int = 1000,
    seed: Optional[int] = 0,
    slack: float = BOUND_SLACK,
) -> ErrorBoundReport:
    """Check ``|x - x*|^2 <= kappa (f(x) - f*)`` at random points of `p`.

    Also reports the smallest κ valid on the sample.
    """
    if np.linalg.matrix_rank(obj.E) < obj.n:
        raise NonUniqueOptimum("E does not have full column rank")
    x_star = np.asarray(x_star, dtype=float)
    f_star = obj.value(x_star)
    rng = spawn_rngs(seed, 1)[0]
    failures = 0
    empirical = 0.0
    for _ in range(samples):
        x = random_point(p, rng)
        dist2 = float((x - x_star) @ (x - x_star))
        excess = obj.value(x) - f_star
        if dist2 > kappa * excess + slack:
            failures += 1
        if excess > 1e-12:
            empirical = max(empirical, dist2 / excess)
    return ErrorBoundReport(samples, failures, kappa, empirical)


@dataclass
class LemmaReport:
    admissible: int
    passes: int
    skips: int
    min_margin: float
    failures: List[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _premises(p: Polytope, rng, attempts_per_draw: int):
    """Yield admissible ``(U, c, z)`` draws, or None for a skipped draw.

    ``z`` must satisfy ``A_I z <= 0`` on the rows ``I`` active at all of ``U``
    and ``<c, z> > 0``.
    """
    V = p.vertices
    # Rows active everywhere are equalities on X; sample z inside their null space.
    equalities = sorted(geometric_constants(p).globally_active)
    basis = null_space(p.A[equalities]) if equalities else np.eye(p.n)
    while True:
        size = int(rng.integers(1, min(len(V), p.n + 1) + 1))
        U = V[rng.choice(len(V), size=size, replace=False)]
        rows = sorted(active_set_of_union(p, U))
        A_I = p.A[rows]
        c = rng.standard_normal(p.n)
        for _ in range(attempts_per_draw):
            z = basis @ rng.standard_normal(basis.shape[1])
            if np.all(A_I @ z <= 1e-12) and c @ z > 0:
                yield U, c, z
                break
        else:
            yield None


def check_vertex_facet_lemma(
    p: Polytope,
    trials: int = 500,
    seed: Optional[int] = 0,
    attempts_per_draw: int = 200,
    tol: float = 1e-9,
) -> LemmaReport:
    """Check ``max <c, v - u> >= (Omega / |U|) <c, z> / |z|`` on random draws.

    The maximum runs over vertices ``v`` of `p` and ``u`` in a random vertex
    subset ``U``.  Draws for which no admissible ``z`` is found are skipped.
    """
    omega = geometric_constants(p).omega
    V = p.vertices
    rng = spawn_rngs(seed, 1)[0]
    report = LemmaReport(0, 0, 0, math.inf)
    for draw in take(trials * 20, _premises(p, rng, attempts_per_draw)):
        if report.admissible >= trials:
            break
        if draw is None:
            report.skips += 1
            continue
        U, c, z = draw
        report.admissible += 1
        lhs = float((V @ c).max() - (U @ c).min())
        rhs = omega / len(U) * float(c @ z) / float(np.linalg.norm(z))
        margin = lhs - rhs
        report.min_margin = min(report.min_margin, margin)
        if margin >= -tol:
            report.passes += 1
        else:
            report.failures.append(report.admissible)
    if report.admissible == 0:
        raise PremiseSamplingFailed(f"no admissible draw in {report.skips} attempts")
    logger.info(
        "vertex-facet check: %d admissible, %d skipped", report.admissible, report.skips
    )
    return report


def corollary_margin(
    obj: CompositeObjective,
    p: Polytope,
    rep: Representation,
    x_star,
    omega: float,
) -> float:
    """Return ``max <grad, u - v> - (Omega / |U|) <grad, x - x*> / |x - x*|``.

    ``u`` runs over the representation and ``v`` over the vertices of `p`;
    a non-negative margin means the inequality holds at ``x``.
    """
    x = rep.point
    diff = x - np.asarray(x_star, dtype=float)
    norm = float(np.linalg.norm(diff))
    if norm == 0:
        return 0.0
    grad = obj.gradient(x)
    lhs = float((rep.vertices @ grad).max() - vertex_oracle(p, grad).objective_value)
    return lhs - omega / rep.size * float(grad @ diff) / norm


def constants_table(
    obj: CompositeObjective,
    p: Polytope,
    reduction=Reduction.CARATHEODORY,
    variant: HoffmanVariant = "squared",
    eps: float = 1e-6,
) -> dict:
    """Collect the certificate constants and the predicted iteration count."""
    cert = rate_certificate(obj, p, reduction, variant)
    return {
        "omega": cert.omega,
        "zeta": cert.zeta,
        "phi": cert.phi,
        "theta": cert.theta,
        "kappa": cert.kappa,
        "rho": cert.rho,
        "D": cert.D,
        "D_E": cert.D_E,
        "G": cert.G,
        "C": cert.C,
        "N": cert.N,
        "alpha": cert.alpha,
        "predicted_iterations": predicted_iterations(cert, eps),
    }
