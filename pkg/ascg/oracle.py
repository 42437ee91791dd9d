"""Vertex linear oracles.

`vertex_oracle` returns a vertex minimizing a linear function over a polytope,
with ties broken towards the smallest vertex id.  The structured kinds are
answered in closed form; generic polytopes scan their enumerated vertices.

The naive oracle for an image set ``E X`` maps the answer of the oracle over
``X``; it minimizes over ``E X`` but its output need not be a vertex of
``E X`` (see `counterexample`).
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from multipledispatch import dispatch
from scipy.optimize import nnls
from toolz import take

from .polyhedron import Box, HPolytope, L1Ball, LiftedL1Box, Polytope, Simplex
from .util import as_matrix, as_vector, first_minimizer, spawn_rngs, unique_points


logger = logging.getLogger(__name__)

HULL_TOL = 1e-8


@dataclass(frozen=True)
class OracleAnswer:
    vertex: np.ndarray
    vertex_id: int
    objective_value: float


@dispatch(Simplex, np.ndarray)
def vertex_minimizer(p, c):
    """Return the smallest vertex id minimizing ``<c, v>`` over `p`."""
    return int(np.argmin(c))


@dispatch(L1Ball, np.ndarray)  # type: ignore[no-redef]
def vertex_minimizer(p, c):  # noqa: F811
    i = int(np.argmax(np.abs(c)))
    # -e_i (odd id) only when it is strictly better than +e_i
    return 2 * i + (1 if c[i] > 0 else 0)


@dispatch(Box, np.ndarray)  # type: ignore[no-redef]
def vertex_minimizer(p, c):  # noqa: F811
    return sum(1 << int(i) for i in np.flatnonzero(c < 0))


@dispatch(LiftedL1Box, np.ndarray)  # type: ignore[no-redef]
def vertex_minimizer(p, c):  # noqa: F811
    cx, cy = c[:-1], c[-1]
    # Coordinate i is used only when |c_i| beats the price of y; the cheaper
    # sign is -sign(c_i), and -1 on ties.
    used = np.abs(cx) > cy
    digits = np.where(used, np.where(cx < 0, 2, 1), 0)
    return sum(int(d) * 3 ** i for i, d in enumerate(digits))


@dispatch(HPolytope, np.ndarray)  # type: ignore[no-redef]
def vertex_minimizer(p, c):  # noqa: F811
    return first_minimizer(p.vertices @ c, tol=1e-12)


def vertex_oracle(p: Polytope, c) -> OracleAnswer:
    """Minimize ``<c, x>`` over `p` and return a minimizing vertex.

    >>> vertex_oracle(Simplex(3), [3.0, -1.0, 2.0]).vertex_id
    1
    >>> vertex_oracle(Box(3), [0.0, 0.0, 1.0]).vertex.tolist()
    [-1.0, -1.0, -1.0]
    """
    c = as_vector(c, p.n, "direction")
    vertex_id = vertex_minimizer(p, c)
    v = p.vertex(vertex_id)
    return OracleAnswer(v, vertex_id, float(c @ v))


OracleType = Callable[[Polytope, np.ndarray], OracleAnswer]


@dataclass(frozen=True)
class MappedAnswer:
    """An answer over ``E X``: the vertex of ``X`` and its image."""

    vertex_id: int
    vertex: np.ndarray
    image: np.ndarray
    objective_value: float


def mapped_oracle_naive(
    p: Polytope, E, c, oracle: OracleType = vertex_oracle
) -> MappedAnswer:
    """Return ``E v`` where ``v`` is the oracle's vertex for ``E' c``."""
    E = as_matrix(E, cols=p.n, name="E")
    c = as_vector(c, E.shape[0], "direction")
    answer = oracle(p, E.T @ c)
    image = E @ answer.vertex
    return MappedAnswer(answer.vertex_id, answer.vertex, image, float(c @ image))


def in_convex_hull(y: np.ndarray, points: np.ndarray, tol: float = HULL_TOL) -> bool:
    """Decide whether `y` is a convex combination of the rows of `points`."""
    if len(points) == 0:
        return False
    M = np.vstack([points.T, np.ones((1, len(points)))])
    _, residual = nnls(M, np.append(y, 1.0))
    return bool(residual <= tol)


def image_vertices(p: Polytope, E) -> FrozenSet[int]:
    """Return the vertex ids of `p` whose images are extreme points of ``E X``."""
    E = as_matrix(E, cols=p.n, name="E")
    images = p.vertices @ E.T
    distinct = unique_points(images)
    extreme = []
    for j in distinct:
        others = images[[i for i in distinct if i != j]]
        if not in_convex_hull(images[j], others):
            extreme.append(images[j])
    return frozenset(
        i
        for i, y in enumerate(images)
        if any(np.max(np.abs(y - e)) <= HULL_TOL for e in extreme)
    )


def repaired_mapped_oracle(p: Polytope, E, c, tol: float = 1e-9) -> MappedAnswer:
    """Return a vertex of ``E X`` with the same value as the naive answer.

    The search runs over the enumerated vertices of `p`, so it is only
    practical for small polytopes.
    """
    naive = mapped_oracle_naive(p, E, c)
    E = as_matrix(E, cols=p.n, name="E")
    values = p.vertices @ (E.T @ np.asarray(c, dtype=float))
    best = values.min()
    extreme = image_vertices(p, E)
    candidates = [
        i
        for i in np.flatnonzero(values <= best + tol * max(1.0, abs(best)))
        if int(i) in extreme
    ]
    if int(naive.vertex_id) in extreme or not candidates:
        return naive
    i = int(candidates[0])
    v = p.vertex(i)
    image = E @ v
    logger.debug("naive image of vertex %d replaced by vertex %d", naive.vertex_id, i)
    return MappedAnswer(i, v, image, float(np.dot(c, image)))


@dataclass
class OracleReport:
    trials: int
    passes: int
    failures: List[Tuple[int, np.ndarray, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _directions(n: int, seed: Optional[int]):
    yield np.zeros(n)
    for rng in spawn_rngs(seed, 1):
        while True:
            yield rng.standard_normal(n)


def verify_oracle(
    p: Polytope,
    trials: int,
    seed: Optional[int] = 0,
    oracle: OracleType = vertex_oracle,
    tol: float = 1e-9,
) -> OracleReport:
    """Check `oracle` against a scan of the enumerated vertices.

    The first direction is zero, for which every vertex is optimal.
    """
    V = p.vertices
    report = OracleReport(trials=trials, passes=0)
    for t, c in enumerate(take(trials, _directions(p.n, seed))):
        answer = oracle(p, c)
        best = float((V @ c).min())
        excess = answer.objective_value - best
        is_vertex = bool(np.any(np.max(np.abs(V - answer.vertex), axis=1) <= tol))
        consistent = abs(float(c @ answer.vertex) - answer.objective_value) <= tol * (
            1.0 + abs(best)
        )
        if excess <= tol * (1.0 + abs(best)) and is_vertex and consistent:
            report.passes += 1
        else:
            report.failures.append((t, c, excess))
    if report.failures:
        logger.warning("%d of %d oracle checks failed", len(report.failures), trials)
    return report


COUNTEREXAMPLE_E = np.array([[1.0, 1.0, 1.0], [1.0, 1.0, -1.0], [0.0, 0.0, 2.0]])
COUNTEREXAMPLE_C = np.array([-1.0, 1.0, 3.0])
COUNTEREXAMPLE_LABELS = {
    "A": (1, 1, 1),
    "B": (1, 1, -1),
    "C": (1, -1, -1),
    "D": (1, -1, 1),
    "E": (-1, 1, 1),
    "F": (-1, -1, 1),
    "G": (-1, 1, -1),
    "H": (-1, -1, -1),
}


def _box_id(coords) -> int:
    return sum(1 << i for i, x in enumerate(coords) if x > 0)


@dataclass(frozen=True)
class Counterexample:
    """The cube mapped by a singular ``E`` where the naive oracle fails."""

    polytope: Box
    E: np.ndarray
    c: np.ndarray
    direction: np.ndarray
    vertex_ids: Dict[str, int]
    images: Dict[str, Tuple[float, ...]]
    extreme_labels: Tuple[str, ...]
    minimizer_labels: Tuple[str, ...]
    offending_label: str
    offending_image: Tuple[float, ...]
    edge_labels: Tuple[str, str]


def counterexample(offending: str = "C") -> Counterexample:
    """Compute the cube instance in which the naive mapped oracle misses a vertex.

    The oracle over ``X`` may return any of the minimizers of ``E' c``; when
    it returns `offending`, the mapped point lies in the middle of an edge of
    ``E X``.
    """
    p = Box(3)
    E, c = COUNTEREXAMPLE_E, COUNTEREXAMPLE_C
    direction = E.T @ c
    ids = {label: _box_id(x) for label, x in COUNTEREXAMPLE_LABELS.items()}
    images = {
        label: tuple(float(t) for t in E @ p.vertex(i)) for label, i in ids.items()
    }
    extreme = image_vertices(p, E)
    values = {label: float(direction @ p.vertex(i)) for label, i in ids.items()}
    best = min(values.values())
    minimizers = tuple(label for label in ids if values[label] <= best + 1e-12)

    if offending not in minimizers:
        raise ValueError(f"vertex {offending} does not minimize E'c")

    def _fixed(q, d):
        v = q.vertex(ids[offending])
        return OracleAnswer(v, ids[offending], float(d @ v))

    answer = mapped_oracle_naive(p, E, c, oracle=_fixed)
    extreme_labels = tuple(label for label in ids if ids[label] in extreme)

    edge = None
    for first in extreme_labels:
        for second in extreme_labels:
            if first < second:
                mid = (np.array(images[first]) + np.array(images[second])) / 2
                if np.allclose(mid, answer.image):
                    edge = (first, second)
    assert edge is not None

    return Counterexample(
        polytope=p,
        E=E,
        c=c,
        direction=direction,
        vertex_ids=ids,
        images=images,
        extreme_labels=extreme_labels,
        minimizer_labels=minimizers,
        offending_label=offending,
        offending_image=tuple(float(t) for t in answer.image),
        edge_labels=edge,
    )
