"""Away-steps conditional gradient (ASCG) and plain conditional gradient (CG).

ASCG keeps the iterate as an explicit convex combination of vertices.  Each
iteration compares the forward direction ``p - x`` (``p`` from the vertex
oracle) with the away direction ``x - u`` (``u`` the worst vertex of the
representation) and steps along the steeper one.  An away step that zeroes
the weight of ``u`` is a drop step.  After the weights are updated the
representation is optionally reduced to affinely independent support.
"""
import csv
import io
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, TextIO, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar
from toolz import sliding_window

from .caratheodory import (
    AddVertex,
    DropVertex,
    IrrState,
    irr_initialize,
    irr_update,
    reduce_full,
    verify_factor,
)
from .errors import (
    AscentDirection,
    DimensionCapExceeded,
    InconsistentState,
    InvalidConfig,
    InvalidRepresentation,
    SingletonAway,
    StallDetected,
    ZeroDirection,
)
from .objective import CompositeObjective
from .oracle import vertex_oracle
from .polyhedron import Polytope, active_set, active_set_of_union
from .util import spawn_rngs


logger = logging.getLogger(__name__)

RECONSTRUCTION_TOL = 1e-8
WEIGHT_SUM_TOL = 1e-10
MONOTONE_TOL = 1e-9

CSV_HEADER = (
    "iteration",
    "f_value",
    "fw_gap",
    "step_type",
    "gamma",
    "gamma_bar",
    "repr_size",
    "s_count",
    "l_count",
)


class StepType(Enum):
    FORWARD = "forward"
    AWAY = "away"
    DROP = "drop"
    STOP = "stop"


class Stepsize(Enum):
    EXACT = "exact"
    ADAPTIVE = "adaptive"


class Reduction(Enum):
    TRIVIAL = "trivial"
    CARATHEODORY = "caratheodory"
    CARATHEODORY_FULL = "caratheodory_full"


@dataclass(frozen=True)
class SolverConfig:
    """Settings of a single solver run.

    Enumerations may be given by value, e.g. ``stepsize="exact"``.
    """

    stepsize: Stepsize = Stepsize.ADAPTIVE
    reduction: Reduction = Reduction.CARATHEODORY
    max_iters: int = 1000
    gap_tolerance: float = 1e-6
    mu_zero_tolerance: float = 1e-12
    start_vertex_id: Optional[int] = None
    seed: Optional[int] = 0
    debug: bool = False
    check_every: int = 10
    refactor_every: int = 64

    def __post_init__(self):
        try:
            object.__setattr__(self, "stepsize", Stepsize(self.stepsize))
            object.__setattr__(self, "reduction", Reduction(self.reduction))
        except ValueError as e:
            raise InvalidConfig(str(e))
        if self.max_iters < 1:
            raise InvalidConfig(f"max_iters must be at least 1, got {self.max_iters}")
        if not self.gap_tolerance > 0:
            raise InvalidConfig(
                f"gap_tolerance must be positive, got {self.gap_tolerance}"
            )
        if not 0 <= self.mu_zero_tolerance < 1:
            raise InvalidConfig("mu_zero_tolerance must lie in [0, 1)")
        if self.check_every < 1 or self.refactor_every < 0:
            raise InvalidConfig("check_every must be positive, refactor_every >= 0")


class Representation:
    """A point together with vertices and positive weights averaging to it.

    ``weights`` maps vertex ids to ``(vertex, weight)`` pairs; its order is the
    order used by the incremental reduction, whose factor (if any) is kept in
    ``factor``.
    """

    __slots__ = ("weights", "point", "factor")

    def __init__(
        self,
        weights: Dict[int, Tuple[np.ndarray, float]],
        point: np.ndarray,
        factor: Optional[IrrState] = None,
    ):
        self.weights = weights
        self.point = point
        self.factor = factor

    @classmethod
    def from_vertex(cls, vertex_id: int, vertex: np.ndarray, with_factor=False):
        vertex = np.asarray(vertex, dtype=float)
        factor = IrrState.single(vertex_id, vertex.shape[0]) if with_factor else None
        return cls({vertex_id: (vertex, 1.0)}, vertex.copy(), factor)

    @property
    def ids(self) -> List[int]:
        return list(self.weights)

    @property
    def mu(self) -> np.ndarray:
        return np.array([w for _, w in self.weights.values()])

    @property
    def vertices(self) -> np.ndarray:
        return np.array([v for v, _ in self.weights.values()])

    @property
    def size(self) -> int:
        return len(self.weights)

    def reconstruct(self) -> np.ndarray:
        return self.mu @ self.vertices

    def check(self, max_size: Optional[int] = None):
        """Raise `InvalidRepresentation` unless the invariants hold."""
        mu = self.mu
        if self.size == 0:
            raise InvalidRepresentation("empty representation")
        if np.any(mu <= 0):
            raise InvalidRepresentation(f"non-positive weights {mu[mu <= 0]}")
        if abs(mu.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidRepresentation(f"weights sum to {mu.sum()!r}")
        err = np.abs(self.point - self.reconstruct()).max()
        if err > RECONSTRUCTION_TOL:
            raise InvalidRepresentation(
                f"point differs from the combination by {err:.3g}"
            )
        if max_size is not None and self.size > max_size:
            raise InvalidRepresentation(
                f"{self.size} vertices exceed the bound {max_size}"
            )

    def __repr__(self):
        return f"Representation(size={self.size}, point={self.point!r})"


@dataclass(frozen=True)
class StepRecord:
    """What happened at one iteration.

    ``f_value`` and ``fw_gap`` describe the iterate the step started from;
    ``repr_size`` is the size after the step.  The counters count drop steps
    and vertex-adding forward steps before this iteration.
    """

    iteration: int
    f_value: float
    fw_gap: float
    step_type: StepType
    gamma: float
    gamma_bar: float
    repr_size: int
    s_count: int = 0
    l_count: int = 0
    fw_vertex_id: Optional[int] = None
    away_vertex_id: Optional[int] = None
    added: bool = False

    def as_row(self) -> Tuple:
        return (
            self.iteration,
            repr(float(self.f_value)),
            repr(float(self.fw_gap)),
            self.step_type.value,
            repr(float(self.gamma)),
            repr(float(self.gamma_bar)),
            self.repr_size,
            self.s_count,
            self.l_count,
        )


@dataclass
class SolverTrace:
    algorithm: str
    records: List[StepRecord]
    point: np.ndarray
    converged: bool
    representation: Optional[Representation] = None
    rho: Optional[float] = None
    config: Optional[SolverConfig] = field(default=None, repr=False)

    @property
    def iterations(self) -> int:
        """Number of steps taken."""
        return sum(r.step_type is not StepType.STOP for r in self.records)

    @property
    def f_values(self) -> np.ndarray:
        return np.array([r.f_value for r in self.records])

    @property
    def gaps(self) -> np.ndarray:
        return np.array([r.fw_gap for r in self.records])

    @property
    def final(self) -> StepRecord:
        return self.records[-1]

    @property
    def drop_count(self) -> int:
        return sum(r.step_type is StepType.DROP for r in self.records)

    @property
    def max_repr_size(self) -> int:
        return max(r.repr_size for r in self.records)

    def first_iteration_below(self, gap: float) -> Optional[int]:
        for r in self.records:
            if r.fw_gap <= gap:
                return r.iteration
        return None

    def write_csv(self, target: Union[str, TextIO]):
        if isinstance(target, str):
            with open(target, "w", newline="") as f:
                self.write_csv(f)
            return
        writer = csv.writer(target)
        writer.writerow(CSV_HEADER)
        writer.writerows(r.as_row() for r in self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def read_trace_csv(source: Union[str, TextIO]) -> List[StepRecord]:
    if isinstance(source, str):
        with open(source, newline="") as f:
            return read_trace_csv(f)
    reader = csv.DictReader(source)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"unexpected trace header {reader.fieldnames}")
    return [
        StepRecord(
            iteration=int(row["iteration"]),
            f_value=float(row["f_value"]),
            fw_gap=float(row["fw_gap"]),
            step_type=StepType(row["step_type"]),
            gamma=float(row["gamma"]),
            gamma_bar=float(row["gamma_bar"]),
            repr_size=int(row["repr_size"]),
            s_count=int(row["s_count"]),
            l_count=int(row["l_count"]),
        )
        for row in reader
    ]


def check_trace_invariants(
    records: Iterable[StepRecord], max_repr: Optional[int] = None
) -> List[str]:
    """Return a description of every invariant a trace violates."""
    records = list(records)
    problems = []
    for r in records:
        if r.fw_gap < -1e-10:
            problems.append(f"iteration {r.iteration}: negative gap {r.fw_gap}")
        if not 0 <= r.gamma <= r.gamma_bar + 1e-15:
            problems.append(f"iteration {r.iteration}: gamma outside [0, gamma_bar]")
        if r.s_count > r.l_count:
            problems.append(f"iteration {r.iteration}: more drops than additions")
        if r.s_count + r.l_count > r.iteration - 1:
            problems.append(f"iteration {r.iteration}: counters exceed steps taken")
        if max_repr is not None and r.repr_size > max_repr:
            problems.append(f"iteration {r.iteration}: {r.repr_size} > {max_repr}")
    for prev, cur in sliding_window(2, records):
        if cur.f_value > prev.f_value + MONOTONE_TOL:
            problems.append(f"iteration {cur.iteration}: objective increased")
    return problems


def stepsize(
    obj: CompositeObjective,
    x: np.ndarray,
    d: np.ndarray,
    gamma_bar: float,
    rule: Stepsize = Stepsize.ADAPTIVE,
    rho: Optional[float] = None,
    grad: Optional[np.ndarray] = None,
) -> float:
    """Choose ``gamma`` in ``[0, gamma_bar]`` along the descent direction `d`.

    The adaptive rule is ``min(-<grad, d> / (rho |d|^2), gamma_bar)``; the
    exact rule minimizes ``f(x + gamma d)``, in closed form for quadratic
    ``g``.
    """
    if not np.any(d):
        raise ZeroDirection("the step direction is zero")
    if grad is None:
        grad = obj.gradient(x)
    slope = float(grad @ d)
    if slope > 1e-12 * max(1.0, float(np.linalg.norm(grad) * np.linalg.norm(d))):
        raise AscentDirection(f"<grad, d> = {slope!r} is positive")
    if slope >= 0:
        return 0.0

    rule = Stepsize(rule)
    if rule is Stepsize.ADAPTIVE:
        if rho is None:
            rho = obj.lipschitz_rho()
        if rho == 0:
            return gamma_bar
        return min(-slope / (rho * float(d @ d)), gamma_bar)

    curvature = obj.curvature(d)
    if curvature is not None:
        if curvature <= 0:
            return gamma_bar
        return min(-slope / (2.0 * curvature), gamma_bar)

    res = minimize_scalar(
        lambda t: obj.value(x + t * d),
        bounds=(0.0, gamma_bar),
        method="bounded",
        options={"xatol": 1e-10},
    )
    if obj.value(x + gamma_bar * d) <= res.fun:
        return gamma_bar
    return float(res.x)


def _start(p: Polytope, cfg: SolverConfig) -> Tuple[int, np.ndarray]:
    if cfg.start_vertex_id is not None:
        return cfg.start_vertex_id, p.vertex(cfg.start_vertex_id)
    rng = spawn_rngs(cfg.seed, 1)[0]
    answer = vertex_oracle(p, rng.standard_normal(p.n))
    return answer.vertex_id, answer.vertex


def _forward_weights(rep: Representation, vertex_id, vertex, gamma):
    if gamma >= 1.0:
        return {vertex_id: (vertex, 1.0)}
    weights = {i: (v, mu * (1.0 - gamma)) for i, (v, mu) in rep.weights.items()}
    if vertex_id in weights:
        v, mu = weights[vertex_id]
        weights[vertex_id] = (v, mu + gamma)
    elif gamma > 0:
        weights[vertex_id] = (vertex, gamma)
    return {i: (v, mu) for i, (v, mu) in weights.items() if mu > 0}


def away_bound(rep: Representation, vertex_id: int) -> float:
    """Return the largest away stepsize ``mu_u / (1 - mu_u)`` for `vertex_id`.

    The complement ``1 - mu_u`` is summed from the other weights, so it stays
    positive when ``mu_u`` rounds to one.
    """
    rest = sum(w for i, (_, w) in rep.weights.items() if i != vertex_id)
    if rest <= 0:
        raise SingletonAway("an away step needs at least two vertices")
    return rep.weights[vertex_id][1] / rest


def _away_weights(rep: Representation, vertex_id, gamma, drop):
    weights = {i: (v, mu * (1.0 + gamma)) for i, (v, mu) in rep.weights.items()}
    if drop:
        del weights[vertex_id]
    else:
        v, mu = weights[vertex_id]
        weights[vertex_id] = (v, mu - gamma)
    return weights


def _reduce(rep_weights, point, old: Representation, event, cfg: SolverConfig):
    if cfg.reduction is Reduction.TRIVIAL:
        return Representation(rep_weights, point)

    ids = list(rep_weights)
    V = np.array([v for v, _ in rep_weights.values()])
    mu = np.array([w for _, w in rep_weights.values()])

    if cfg.reduction is Reduction.CARATHEODORY_FULL:
        kept, mu = reduce_full(V, mu, zero_tol=cfg.mu_zero_tolerance)
        weights = {ids[j]: (V[j], float(w)) for j, w in zip(kept, mu)}
        return Representation(weights, point)

    factor = old.factor
    if factor is None:
        factor = irr_initialize(old.ids, old.vertices)
    factor, kept_ids, mu = irr_update(
        factor,
        ids,
        V,
        mu,
        event,
        zero_tol=cfg.mu_zero_tolerance,
        refactor_every=cfg.refactor_every,
    )
    weights = {i: (rep_weights[i][0], float(w)) for i, w in zip(kept_ids, mu)}
    rep = Representation(weights, point, factor)
    if cfg.debug:
        verify_factor(factor, rep.ids, rep.vertices)
    return rep


def ascg_step(
    obj: CompositeObjective,
    p: Polytope,
    rep: Representation,
    cfg: SolverConfig,
    rho: Optional[float] = None,
    iteration: int = 1,
) -> Tuple[Representation, StepRecord]:
    """Take one ASCG step from `rep`.

    Returns the new representation and the record of the step.  When the
    Frank-Wolfe gap is within tolerance the representation is returned
    unchanged with a ``STOP`` record.
    """
    x = rep.point
    grad = obj.gradient(x)
    f = obj.value(x)
    fw = vertex_oracle(p, grad)
    gap = float(grad @ (x - fw.vertex))

    if gap <= cfg.gap_tolerance:
        return rep, StepRecord(
            iteration,
            f,
            gap,
            StepType.STOP,
            0.0,
            0.0,
            rep.size,
            fw_vertex_id=fw.vertex_id,
        )

    ids = rep.ids
    values = rep.vertices @ grad
    worst = values.max()
    u_id = min(i for i, val in zip(ids, values) if val == worst)
    u, mu_u = rep.weights[u_id]

    d_fw = fw.vertex - x
    d_away = x - u

    if grad @ d_fw <= grad @ d_away:
        gamma_bar = 1.0
        gamma = stepsize(obj, x, d_fw, gamma_bar, cfg.stepsize, rho, grad)
        added = fw.vertex_id not in rep.weights and gamma > 0
        weights = _forward_weights(rep, fw.vertex_id, fw.vertex, gamma)
        point = x + gamma * d_fw
        event = AddVertex(fw.vertex_id) if added else None
        step_type = StepType.FORWARD
    else:
        added = False
        gamma_bar = away_bound(rep, u_id)
        gamma = stepsize(obj, x, d_away, gamma_bar, cfg.stepsize, rho, grad)
        remaining = mu_u * (1.0 + gamma) - gamma
        drop = gamma >= gamma_bar or remaining <= cfg.mu_zero_tolerance
        weights = _away_weights(rep, u_id, gamma, drop)
        point = x + gamma * d_away
        event = DropVertex(u_id) if drop else None
        step_type = StepType.DROP if drop else StepType.AWAY

    new = _reduce(weights, point, rep, event, cfg)
    if cfg.debug:
        new.check(max_size=p.n + 1 if cfg.reduction is not Reduction.TRIVIAL else None)

    logger.debug(
        "iteration %d: %s gamma=%.3g/%.3g gap=%.3g |U|=%d",
        iteration,
        step_type.value,
        gamma,
        gamma_bar,
        gap,
        new.size,
    )
    return new, StepRecord(
        iteration,
        f,
        gap,
        step_type,
        float(gamma),
        float(gamma_bar),
        new.size,
        fw_vertex_id=fw.vertex_id,
        away_vertex_id=u_id,
        added=added,
    )


def check_active_sets(p: Polytope, rep: Representation, tol: float = 1e-7) -> bool:
    """Check that the rows active at the point are those active at every vertex.

    Returns True without checking when the smallest weight is below ``1e-6``,
    where `tol` cannot separate the two sets.
    """
    if rep.mu.min() < 1e-6:
        return True
    return active_set(p, rep.point, tol) == active_set_of_union(p, rep.vertices, tol)


def _stop_record(obj, p, x, iteration, size, s, l_):
    grad = obj.gradient(x)
    fw = vertex_oracle(p, grad)
    gap = float(grad @ (x - fw.vertex))
    return StepRecord(
        iteration, obj.value(x), gap, StepType.STOP, 0.0, 0.0, size, s, l_, fw.vertex_id
    )


def _check_monotone(records):
    if len(records) >= 2:
        prev, cur = records[-2].f_value, records[-1].f_value
        if cur > prev + MONOTONE_TOL:
            raise StallDetected(records[-1].iteration, prev, cur)


def _rho_for(obj, cfg):
    return obj.lipschitz_rho() if cfg.stepsize is Stepsize.ADAPTIVE else None


def ascg_run(
    obj: CompositeObjective, p: Polytope, cfg: Optional[SolverConfig] = None
) -> SolverTrace:
    """Run ASCG until the Frank-Wolfe gap drops below tolerance.

    The returned trace ends with a ``STOP`` record for the final iterate.
    """
    cfg = cfg or SolverConfig()
    rho = _rho_for(obj, cfg)
    vertex_id, vertex = _start(p, cfg)
    rep = Representation.from_vertex(
        vertex_id, vertex, with_factor=cfg.reduction is Reduction.CARATHEODORY
    )

    records: List[StepRecord] = []
    s = l_ = 0
    for k in range(1, cfg.max_iters + 1):
        new, record = ascg_step(obj, p, rep, cfg, rho=rho, iteration=k)
        records.append(replace(record, s_count=s, l_count=l_))
        _check_monotone(records)
        if record.step_type is StepType.STOP:
            break
        s += record.step_type is StepType.DROP
        l_ += record.added
        rep = new
        if cfg.debug and k % cfg.check_every == 0:
            try:
                ok = check_active_sets(p, rep)
            except DimensionCapExceeded:
                ok = True
            if not ok:
                raise InconsistentState(f"active sets of x and U differ at {k + 1}")
    else:
        records.append(
            _stop_record(obj, p, rep.point, cfg.max_iters + 1, rep.size, s, l_)
        )
        _check_monotone(records)

    trace = SolverTrace(
        "ascg",
        records,
        rep.point,
        records[-1].fw_gap <= cfg.gap_tolerance,
        rep,
        rho,
        cfg,
    )
    logger.info(
        "ascg: %d steps, f=%.10g, gap=%.3g, drops=%d, max |U|=%d",
        trace.iterations,
        trace.final.f_value,
        trace.final.fw_gap,
        trace.drop_count,
        trace.max_repr_size,
    )
    return trace


def cg_step(
    obj: CompositeObjective,
    p: Polytope,
    x: np.ndarray,
    cfg: SolverConfig,
    rho: Optional[float] = None,
    iteration: int = 1,
) -> Tuple[np.ndarray, StepRecord]:
    """Take one plain conditional gradient step from `x`."""
    grad = obj.gradient(x)
    f = obj.value(x)
    fw = vertex_oracle(p, grad)
    gap = float(grad @ (x - fw.vertex))
    if gap <= cfg.gap_tolerance:
        return x, StepRecord(
            iteration, f, gap, StepType.STOP, 0.0, 0.0, 0, fw_vertex_id=fw.vertex_id
        )
    d = fw.vertex - x
    gamma = stepsize(obj, x, d, 1.0, cfg.stepsize, rho, grad)
    record = StepRecord(
        iteration,
        f,
        gap,
        StepType.FORWARD,
        float(gamma),
        1.0,
        0,
        fw_vertex_id=fw.vertex_id,
        added=gamma > 0,
    )
    return x + gamma * d, record


def cg_run(
    obj: CompositeObjective, p: Polytope, cfg: Optional[SolverConfig] = None
) -> SolverTrace:
    """Run plain CG from the same start vertex ASCG would use."""
    cfg = cfg or SolverConfig()
    rho = _rho_for(obj, cfg)
    _, x = _start(p, cfg)

    records: List[StepRecord] = []
    steps = 0
    for k in range(1, cfg.max_iters + 1):
        x_new, record = cg_step(obj, p, x, cfg, rho=rho, iteration=k)
        records.append(replace(record, l_count=steps))
        _check_monotone(records)
        if record.step_type is StepType.STOP:
            break
        steps += 1
        x = x_new
    else:
        records.append(_stop_record(obj, p, x, cfg.max_iters + 1, 0, 0, steps))
        _check_monotone(records)

    converged = records[-1].fw_gap <= cfg.gap_tolerance
    trace = SolverTrace("cg", records, x, converged, None, rho, cfg)
    logger.info(
        "cg: %d steps, f=%.10g, gap=%.3g",
        trace.iterations,
        trace.final.f_value,
        trace.final.fw_gap,
    )
    return trace
