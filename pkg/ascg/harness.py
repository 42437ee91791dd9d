"""Problem files, instance generators and the solver comparison runner."""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
from toolz import merge

from .errors import ASCGError, InvalidConfig
from .objective import CompositeObjective, QuadraticFunction, objective_from_dict
from .polyhedron import (
    GENERIC_DIMENSION_CAP,
    Box,
    L1Ball,
    LiftedL1Box,
    Polytope,
    Simplex,
    polytope_from_dict,
    polytope_to_dict,
)
from .solver import Reduction, SolverConfig, SolverTrace, Stepsize, ascg_run, cg_run
from .util import as_matrix, as_vector, spawn_rngs


logger = logging.getLogger(__name__)


@dataclass
class Problem:
    polytope: Polytope
    objective: CompositeObjective
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        p = self.polytope
        h_form = isinstance(p, LiftedL1Box) and p.k <= GENERIC_DIMENSION_CAP
        return {
            "polytope": polytope_to_dict(p, include_h_form=h_form),
            "objective": self.objective.to_dict(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Problem":
        return cls(
            polytope_from_dict(data["polytope"]),
            objective_from_dict(data["objective"]),
            dict(data.get("meta", {})),
        )


def save_problem(problem: Problem, path: str):
    with open(path, "w") as f:
        json.dump(problem.to_dict(), f)


def load_problem(path: str) -> Problem:
    with open(path) as f:
        return Problem.from_dict(json.load(f))


def l1ls_problem(B, c, lam: float) -> Problem:
    """Build ``min |B x - c|^2 + lam |x|_1`` over ``[-1, 1]^n`` in lifted form.

    The variable is ``(x, y)`` with ``|x|_1 <= y <= n``; the objective is
    ``g(E (x, y)) + lam y`` with ``E = [B, 0]`` and ``g(w) = |w - c|^2``.
    """
    B = as_matrix(B, name="B")
    k, n = B.shape
    c = as_vector(c, k, "c")
    if lam < 0:
        raise InvalidConfig(f"lambda must be non-negative, got {lam}")
    E = np.hstack([B, np.zeros((k, 1))])
    b = np.zeros(n + 1)
    b[-1] = lam
    g = QuadraticFunction(np.eye(k), -2.0 * c, float(c @ c))
    return Problem(
        LiftedL1Box(n),
        CompositeObjective(E, b, g),
        {"family": "l1ls", "k": k, "n": n, "lambda": lam},
    )


def generate_l1ls(k: int, n: int, lam: float, seed: Optional[int] = 0) -> Problem:
    """Draw ``B`` and ``c`` with standard Gaussian entries."""
    if k < 1 or n < 1:
        raise InvalidConfig(f"k and n must be positive, got k={k}, n={n}")
    rng = spawn_rngs(seed, 1)[0]
    B = rng.standard_normal((k, n))
    c = rng.standard_normal(k)
    problem = l1ls_problem(B, c, lam)
    problem.meta["seed"] = seed
    return problem


_KINDS = {"simplex": Simplex, "box": Box, "l1_ball": L1Ball}


def random_quadratic_problem(kind: str, n: int, seed: Optional[int] = 0) -> Problem:
    """Draw a strongly convex instance with full-column-rank ``E``.

    ``g(y) = |y - t|^2`` with a target ``t`` placed outside ``E X`` most of the
    time, so that the optimum sits on the boundary.
    """
    try:
        p = _KINDS[kind](n)
    except KeyError:
        raise InvalidConfig(f"unknown polytope kind {kind!r}")
    rng = spawn_rngs(seed, 1)[0]
    orth, _ = np.linalg.qr(rng.standard_normal((n, n)))
    E = orth * rng.uniform(0.5, 1.5, size=n)
    t = 2.0 * rng.standard_normal(n)
    g = QuadraticFunction(np.eye(n), -2.0 * t, float(t @ t))
    b = 0.1 * rng.standard_normal(n)
    return Problem(
        p,
        CompositeObjective(E, b, g),
        {"family": "quadratic", "kind": kind, "n": n, "seed": seed},
    )


@dataclass(frozen=True)
class RunConfig:
    """One column of a comparison: an algorithm and its solver settings."""

    label: str
    algorithm: str = "ascg"
    config: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.algorithm not in ("ascg", "cg"):
            raise InvalidConfig(f"unknown algorithm {self.algorithm!r}")

    def run(self, problem: Problem) -> SolverTrace:
        solve = ascg_run if self.algorithm == "ascg" else cg_run
        return solve(problem.objective, problem.polytope, self.config)


def default_runs(base: Optional[SolverConfig] = None) -> List[RunConfig]:
    """ASCG under every stepsize/reduction pair, then CG under each stepsize."""
    base = base or SolverConfig()
    runs = [
        RunConfig(
            f"ascg-{s.value}-{r.value}", "ascg", replace(base, stepsize=s, reduction=r)
        )
        for s in (Stepsize.EXACT, Stepsize.ADAPTIVE)
        for r in (Reduction.TRIVIAL, Reduction.CARATHEODORY)
    ]
    runs += [
        RunConfig(f"cg-{s.value}", "cg", replace(base, stepsize=s))
        for s in (Stepsize.EXACT, Stepsize.ADAPTIVE)
    ]
    return runs


@dataclass(frozen=True)
class CompareRow:
    label: str
    algorithm: str
    iterations_to_1e3: Optional[int] = None
    iterations_to_1e6: Optional[int] = None
    final_f: Optional[float] = None
    final_gap: Optional[float] = None
    drops: Optional[int] = None
    max_repr: Optional[int] = None
    error: Optional[str] = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _compare_one(problem: Problem, run: RunConfig) -> CompareRow:
    try:
        trace = run.run(problem)
    except ASCGError as e:
        logger.warning("run %s failed: %s", run.label, e)
        return CompareRow(run.label, run.algorithm, error=f"{type(e).__name__}: {e}")
    return CompareRow(
        run.label,
        run.algorithm,
        iterations_to_1e3=trace.first_iteration_below(1e-3),
        iterations_to_1e6=trace.first_iteration_below(1e-6),
        final_f=trace.final.f_value,
        final_gap=trace.final.fw_gap,
        drops=trace.drop_count,
        max_repr=trace.max_repr_size if run.algorithm == "ascg" else None,
    )


def compare(
    problem: Problem, runs: Sequence[RunConfig], jobs: int = 1
) -> List[CompareRow]:
    """Run every configuration on `problem`; rows follow the order of `runs`."""
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda r: _compare_one(problem, r), runs))
    return [_compare_one(problem, r) for r in runs]


COMPARE_COLUMNS = (
    "label",
    "algorithm",
    "iterations_to_1e3",
    "iterations_to_1e6",
    "final_f",
    "final_gap",
    "drops",
    "max_repr",
    "error",
)


def _cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def format_table(rows: Sequence[dict], columns: Optional[Sequence[str]] = None) -> str:
    """Render dict rows as a fixed-width text table."""
    if not rows:
        return ""
    columns = list(columns or rows[0].keys())
    cells = [[_cell(row.get(c)) for c in columns] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in cells]
    return "\n".join(lines)


def compare_table(rows: Sequence[CompareRow]) -> str:
    return format_table([r.as_dict() for r in rows], COMPARE_COLUMNS)


def trace_summary(trace: SolverTrace) -> dict:
    return merge(
        {
            "algorithm": trace.algorithm,
            "iterations": trace.iterations,
            "converged": trace.converged,
            "final_f": trace.final.f_value,
            "final_gap": trace.final.fw_gap,
            "drops": trace.drop_count,
            "max_repr": trace.max_repr_size,
        },
        {"point": trace.point.tolist()},
    )
