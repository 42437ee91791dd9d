"""Polytopes in H-form, their vertices, active sets and geometric constants.

Four structured kinds are known in closed form (`Simplex`, `L1Ball`, `Box` and
`LiftedL1Box`); anything else is an `HPolytope` whose vertices are enumerated
by brute force over row subsets, which is only meant for small dimensions.

Row indices are 0-based throughout.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from itertools import combinations, product
from math import comb, sqrt
from typing import ClassVar, FrozenSet, Optional, Tuple

import numpy as np
from multipledispatch import dispatch
from scipy.optimize import linprog
from scipy.spatial.distance import pdist

from .errors import (
    DegeneratePolytope,
    DimensionCapExceeded,
    DimensionMismatch,
    EmptySet,
    InfeasiblePoint,
    TooManyVertices,
    UnboundedSet,
)
from .util import (
    affine_rank,
    as_matrix,
    as_vector,
    intersection,
    lexicographic_order,
    unique_points,
)


logger = logging.getLogger(__name__)

ACTIVITY_TOL = 1e-9
VERTEX_TOL = 1e-9
FEASIBILITY_TOL = 1e-7
GENERIC_DIMENSION_CAP = 12
MATERIALIZE_CAP = 16
MAX_ENUMERATED_VERTICES = 2 ** 16
MAX_PAIRWISE_VERTICES = 4096
MAX_ROW_SUBSETS = 2_000_000

ActiveSet = FrozenSet[int]


def _frozen(x: np.ndarray) -> np.ndarray:
    x.flags.writeable = False
    return x


class Polytope(ABC):
    """A bounded polyhedron ``{x : A x <= a}`` in ``R^n``.

    Instances are immutable.  The H-form and the vertex list are computed
    lazily and cached.
    """

    __slots__ = ("n", "_h_form", "_vertices")

    kind: ClassVar[str]

    def __init__(self, n: int):
        if int(n) != n or n < 1:
            raise DimensionMismatch(f"dimension must be a positive integer, got {n}")
        self.n = int(n)
        self._h_form: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self._vertices: Optional[np.ndarray] = None

    @abstractmethod
    def _build_h_form(self) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError()

    @property
    def h_form(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._h_form is None:
            A, a = self._build_h_form()
            self._h_form = (_frozen(A), _frozen(a))
        return self._h_form

    @property
    def A(self) -> np.ndarray:
        return self.h_form[0]

    @property
    def a(self) -> np.ndarray:
        return self.h_form[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    @abstractmethod
    def vertex_count(self) -> int:
        raise NotImplementedError()

    @abstractmethod
    def vertex(self, vertex_id: int) -> np.ndarray:
        """Return the coordinates of the vertex with the given id."""
        raise NotImplementedError()

    def _check_id(self, vertex_id: int):
        if not 0 <= vertex_id < self.vertex_count:
            raise IndexError(f"vertex id {vertex_id} out of range for {self!r}")

    def _structured_vertices(self) -> np.ndarray:
        if self.vertex_count > MAX_ENUMERATED_VERTICES:
            raise TooManyVertices(
                f"{self!r} has {self.vertex_count} vertices; "
                f"enumeration is capped at {MAX_ENUMERATED_VERTICES}"
            )
        return np.array([self.vertex(i) for i in range(self.vertex_count)])

    @property
    def vertices(self) -> np.ndarray:
        if self._vertices is None:
            # Built completely before being published
            V = _frozen(np.asarray(self._structured_vertices(), dtype=float))
            self._vertices = V
        return self._vertices

    def contains(self, x, tol: float = FEASIBILITY_TOL) -> bool:
        x = as_vector(x, self.n, "point")
        return bool(np.all(self.A @ x <= self.a + tol))

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return self.n == other.n

    def __hash__(self):
        return hash((type(self).__name__, self.n))

    def __repr__(self):
        return f"{type(self).__name__}({self.n})"


class Simplex(Polytope):
    """The probability simplex ``{x >= 0, 1'x = 1}``.

    The H-form is ``[-I; 1'; -1']`` with right-hand side ``(0, ..., 0, 1, -1)``.
    Vertex ``i`` is the unit vector ``e_i``.
    """

    __slots__ = ()
    kind = "simplex"

    def _build_h_form(self):
        n = self.n
        A = np.vstack([-np.eye(n), np.ones((1, n)), -np.ones((1, n))])
        a = np.concatenate([np.zeros(n), [1.0, -1.0]])
        return A, a

    @property
    def vertex_count(self):
        return self.n

    def vertex(self, vertex_id):
        self._check_id(vertex_id)
        v = np.zeros(self.n)
        v[vertex_id] = 1.0
        return v

    def _structured_vertices(self):
        return np.eye(self.n)


class L1Ball(Polytope):
    """The unit ℓ1 ball.

    Vertex ``2 i`` is ``+e_i`` and vertex ``2 i + 1`` is ``-e_i``.  The H-form
    has one row per sign vector, in `itertools.product` order, and is only
    materialized for ``n <= 16``.
    """

    __slots__ = ()
    kind = "l1_ball"

    def _build_h_form(self):
        if self.n > MATERIALIZE_CAP:
            raise DimensionCapExceeded(
                f"the ℓ1 ball H-form has 2^{self.n} rows; "
                f"only materialized for n <= {MATERIALIZE_CAP}"
            )
        A = np.array(list(product((-1.0, 1.0), repeat=self.n)))
        return A, np.ones(A.shape[0])

    @property
    def vertex_count(self):
        return 2 * self.n

    def vertex(self, vertex_id):
        self._check_id(vertex_id)
        v = np.zeros(self.n)
        v[vertex_id // 2] = -1.0 if vertex_id % 2 else 1.0
        return v

    def _structured_vertices(self):
        V = np.zeros((2 * self.n, self.n))
        idx = np.arange(self.n)
        V[2 * idx, idx] = 1.0
        V[2 * idx + 1, idx] = -1.0
        return V


class Box(Polytope):
    """The ℓ∞ ball ``[-1, 1]^n`` with H-form ``[I; -I]``, ``a = 1``.

    Bit ``i`` of a vertex id is set when coordinate ``i`` equals ``+1``.
    """

    __slots__ = ()
    kind = "box"

    def _build_h_form(self):
        n = self.n
        return np.vstack([np.eye(n), -np.eye(n)]), np.ones(2 * n)

    @property
    def vertex_count(self):
        return 2 ** self.n

    def vertex(self, vertex_id):
        self._check_id(vertex_id)
        bits = (vertex_id >> np.arange(self.n)) & 1
        return 2.0 * bits - 1.0

    def _structured_vertices(self):
        if self.vertex_count > MAX_ENUMERATED_VERTICES:
            return super()._structured_vertices()
        ids = np.arange(self.vertex_count)[:, None]
        return 2.0 * ((ids >> np.arange(self.n)) & 1) - 1.0


class LiftedL1Box(Polytope):
    """The set ``{(x, y) : x in [-1, 1]^k, |x|_1 <= y <= k}`` in ``R^(k+1)``.

    Its vertices are ``(x, |x|_1)`` for ``x in {-1, 0, 1}^k``; the id of a
    vertex is the base-3 number whose digit ``i`` is 0, 1 or 2 when
    ``x_i`` is 0, -1 or +1.

    Rows: ``[I, 0; -I, 0] <= 1``, ``s'x - y <= 0`` for every sign vector ``s``,
    ``y <= k`` and ``-y <= 0``.
    """

    __slots__ = ("k",)
    kind = "lifted_l1_box"

    def __init__(self, k: int):
        if int(k) != k or k < 1:
            raise DimensionMismatch(f"base dimension must be positive, got {k}")
        self.k = int(k)
        super().__init__(self.k + 1)

    def _build_h_form(self):
        k = self.k
        if k > MATERIALIZE_CAP:
            raise DimensionCapExceeded(
                f"the lifted ℓ1 H-form has 2^{k} coupling rows; "
                f"only materialized for k <= {MATERIALIZE_CAP}"
            )
        box = np.hstack([np.vstack([np.eye(k), -np.eye(k)]), np.zeros((2 * k, 1))])
        signs = np.array(list(product((-1.0, 1.0), repeat=k)))
        coupling = np.hstack([signs, -np.ones((signs.shape[0], 1))])
        top = np.zeros((1, k + 1))
        top[0, k] = 1.0
        A = np.vstack([box, coupling, top, -top])
        a = np.concatenate(
            [np.ones(2 * k), np.zeros(signs.shape[0]), [float(k), 0.0]]
        )
        return A, a

    @property
    def vertex_count(self):
        return 3 ** self.k

    def vertex(self, vertex_id):
        self._check_id(vertex_id)
        digits = (vertex_id // 3 ** np.arange(self.k)) % 3
        x = np.select([digits == 1, digits == 2], [-1.0, 1.0], 0.0)
        return np.append(x, np.abs(x).sum())

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return self.k == other.k

    def __hash__(self):
        return hash((type(self).__name__, self.k))

    def __repr__(self):
        return f"LiftedL1Box({self.k})"


class HPolytope(Polytope):
    """A general polytope ``{x : A x <= a}``.

    Boundedness and non-emptiness are checked at construction with one LP per
    coordinate direction.  Vertex ids index the lexicographically sorted
    vertex list, which is enumerated on first use unless it is supplied.
    """

    __slots__ = ("_A", "_a", "vertex_cap")
    kind = "generic"

    def __init__(
        self,
        A,
        a,
        vertices=None,
        vertex_cap: int = GENERIC_DIMENSION_CAP,
    ):
        A = as_matrix(A, name="A")
        m, n = A.shape
        if m == 0:
            raise UnboundedSet("an H-form without rows is unbounded")
        a = as_vector(a, m, "a")
        super().__init__(n)
        self.vertex_cap = vertex_cap
        self._A = _frozen(A.copy())
        self._a = _frozen(a.copy())

        if vertices is None and n > vertex_cap:
            raise DimensionCapExceeded(
                f"vertex enumeration is capped at n <= {vertex_cap}, got n = {n}"
            )

        self._check_bounded()

        if vertices is not None:
            V = as_matrix(vertices, cols=n, name="vertices")
            self._check_vertices(V)
            self._vertices = _frozen(V[lexicographic_order(V)].copy())

    def _build_h_form(self):
        return self._A, self._a

    def _check_bounded(self):
        n = self.n
        for i, sign in product(range(n), (1.0, -1.0)):
            c = np.zeros(n)
            c[i] = sign
            res = linprog(
                c, A_ub=self._A, b_ub=self._a, bounds=[(None, None)] * n, method="highs"
            )
            if res.status == 2:
                raise EmptySet("the H-form has no feasible point")
            if res.status == 3:
                raise UnboundedSet(f"coordinate {i} is unbounded in direction {sign:+}")

    def _check_vertices(self, V):
        for v in V:
            slack = self._a - self._A @ v
            if np.any(slack < -FEASIBILITY_TOL):
                raise InfeasiblePoint(f"supplied vertex {v} is not in the polytope")
            tight = self._A[np.abs(slack) <= ACTIVITY_TOL]
            if tight.shape[0] < self.n or np.linalg.matrix_rank(tight) < self.n:
                raise InfeasiblePoint(f"supplied point {v} is not a vertex")

    def _structured_vertices(self):
        return enumerate_h_vertices(self._A, self._a)

    @property
    def vertex_count(self):
        return self.vertices.shape[0]

    def vertex(self, vertex_id):
        self._check_id(vertex_id)
        return self.vertices[vertex_id].copy()

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return (
            self._A.shape == other._A.shape
            and np.array_equal(self._A, other._A)
            and np.array_equal(self._a, other._a)
        )

    def __hash__(self):
        return hash((self._A.tobytes(), self._a.tobytes()))

    def __repr__(self):
        return f"HPolytope(m={self.m}, n={self.n})"


def enumerate_h_vertices(A: np.ndarray, a: np.ndarray, tol: float = VERTEX_TOL):
    """Enumerate the vertices of ``{x : A x <= a}`` over all n-row subsets.

    The result is deduplicated at `tol` and sorted lexicographically.

    >>> enumerate_h_vertices(np.array([[1.0], [-1.0]]), np.array([1.0, 0.0]))
    array([[0.],
           [1.]])
    """
    m, n = A.shape
    if comb(m, n) > MAX_ROW_SUBSETS:
        raise DimensionCapExceeded(
            f"{comb(m, n)} row subsets exceed the enumeration budget"
        )

    found = []
    for rows in combinations(range(m), n):
        sub = A[list(rows)]
        if np.linalg.matrix_rank(sub) < n:
            continue
        v = np.linalg.solve(sub, a[list(rows)]) + 0.0
        if np.all(A @ v <= a + tol * (1.0 + np.abs(a))):
            found.append(v)

    if not found:
        raise EmptySet("no vertex found; the polytope is empty or unbounded")

    V = np.array(found)
    V = V[unique_points(V, tol)]
    logger.debug("enumerated %d vertices from %d rows in R^%d", len(V), m, n)
    return V[lexicographic_order(V)]


def enumerate_vertices(p: Polytope) -> np.ndarray:
    """Return every vertex of `p`, indexed by vertex id."""
    return p.vertices


def active_set(p: Polytope, x, tol: float = ACTIVITY_TOL) -> ActiveSet:
    """Return the rows ``i`` with ``|a_i - A_i x| <= tol``.

    Raises `InfeasiblePoint` when `x` violates a row by more than the
    feasibility tolerance.

    >>> sorted(active_set(Simplex(3), [1.0, 0.0, 0.0]))
    [1, 2, 3, 4]
    """
    x = as_vector(x, p.n, "point")
    slack = p.a - p.A @ x
    if np.any(slack < -max(tol, FEASIBILITY_TOL)):
        worst = int(np.argmin(slack))
        raise InfeasiblePoint(f"row {worst} is violated by {-slack[worst]:.3g}")
    return frozenset(int(i) for i in np.flatnonzero(np.abs(slack) <= tol))


def active_set_of_union(p: Polytope, points, tol: float = ACTIVITY_TOL) -> ActiveSet:
    """Return the rows active at every one of `points`."""
    sets = [sorted(active_set(p, x, tol)) for x in points]
    if not sets:
        return frozenset(range(p.m))
    return frozenset(intersection(*sets))


@dataclass(frozen=True)
class GeometricConstants:
    """The vertex-facet quantities of a polytope.

    ``zeta`` is the smallest positive vertex slack, ``phi`` the largest row
    norm among rows that are not active everywhere, ``omega = zeta / phi`` and
    ``diameter`` the largest distance between two vertices.
    """

    zeta: float
    phi: float
    omega: float
    diameter: float
    globally_active: ActiveSet


def _constants_from_vertices(A, a, V, tol=ACTIVITY_TOL, rows=None):
    if len(unique_points(V)) < 2:
        raise DegeneratePolytope("the polytope is a single point")
    slack = a[:, None] - A @ V.T
    everywhere = np.all(np.abs(slack) <= tol, axis=1)
    globally_active = frozenset(int(i) for i in np.flatnonzero(everywhere))
    positive = slack[slack > tol]
    zeta = float(positive.min())
    candidates = np.flatnonzero(~everywhere)
    if rows is not None:
        candidates = np.array([i for i in candidates if i in rows], dtype=int)
    phi = float(np.linalg.norm(A[candidates], axis=1).max())
    return GeometricConstants(
        zeta, phi, zeta / phi, _max_pairwise_distance(V), globally_active
    )


@dispatch(Simplex)
def _closed_form_constants(p):
    if p.n == 1:
        raise DegeneratePolytope("the 1-simplex is a single point")
    return GeometricConstants(1.0, 1.0, 1.0, diameter(p), frozenset({p.n, p.n + 1}))


@dispatch(L1Ball)  # type: ignore[no-redef]
def _closed_form_constants(p):  # noqa: F811
    phi = sqrt(p.n)
    return GeometricConstants(2.0, phi, 2.0 / phi, diameter(p), frozenset())


@dispatch(Box)  # type: ignore[no-redef]
def _closed_form_constants(p):  # noqa: F811
    return GeometricConstants(2.0, 1.0, 2.0, diameter(p), frozenset())


@dispatch(LiftedL1Box)  # type: ignore[no-redef]
def _closed_form_constants(p):  # noqa: F811
    phi = sqrt(p.k + 1)
    return GeometricConstants(1.0, phi, 1.0 / phi, diameter(p), frozenset())


@dispatch(HPolytope)  # type: ignore[no-redef]
def _closed_form_constants(p):  # noqa: F811
    return _constants_from_vertices(p.A, p.a, p.vertices)


def geometric_constants(
    p: Polytope, prune_redundant_rows: bool = False
) -> GeometricConstants:
    """Compute ζ, φ and Ω for `p`.

    Structured kinds use closed forms.  With `prune_redundant_rows`, φ is
    taken over facet-defining rows only.

    >>> geometric_constants(Box(3)).omega
    2.0
    >>> geometric_constants(Simplex(4)).omega
    1.0
    """
    if prune_redundant_rows and isinstance(p, HPolytope):
        return _constants_from_vertices(p.A, p.a, p.vertices, rows=set(facet_rows(p)))
    return _closed_form_constants(p)


def facet_rows(p: Polytope, tol: float = ACTIVITY_TOL) -> Tuple[int, ...]:
    """Return the rows defining facets of `p` relative to its affine hull.

    Rows active on all of `p` and positive multiples of an earlier row are
    left out.
    """
    A, a, V = p.A, p.a, p.vertices
    dim = affine_rank(V)
    slack = a[:, None] - A @ V.T
    keep = []
    for i in range(A.shape[0]):
        tight = np.abs(slack[i]) <= tol
        if tight.all() or not tight.any():
            continue
        if affine_rank(V[tight]) == dim - 1:
            keep.append(i)
    if not keep:
        return ()
    norms = np.linalg.norm(A[keep], axis=1)
    normalized = np.hstack([A[keep], a[keep, None]]) / norms[:, None]
    return tuple(keep[j] for j in unique_points(normalized, tol))


@dispatch(Simplex)
def _closed_form_diameter(p):
    return sqrt(2.0) if p.n > 1 else 0.0


@dispatch(L1Ball)  # type: ignore[no-redef]
def _closed_form_diameter(p):  # noqa: F811
    return 2.0


@dispatch(Box)  # type: ignore[no-redef]
def _closed_form_diameter(p):  # noqa: F811
    return 2.0 * sqrt(p.n)


@dispatch(LiftedL1Box)  # type: ignore[no-redef]
def _closed_form_diameter(p):  # noqa: F811
    k = p.k
    return sqrt(max(4 * k, k * k + k))


@dispatch(HPolytope)  # type: ignore[no-redef]
def _closed_form_diameter(p):  # noqa: F811
    return _max_pairwise_distance(p.vertices)


def _max_pairwise_distance(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    if len(points) > MAX_PAIRWISE_VERTICES:
        raise TooManyVertices(
            f"{len(points)} points exceed the pairwise-distance budget"
        )
    return float(pdist(points).max())


def diameter(p: Polytope) -> float:
    """Return ``D = max |v - w|`` over vertex pairs."""
    return float(_closed_form_diameter(p))


def diameter_of_image(p: Polytope, E) -> float:
    """Return ``D_E = max |E v - E w|`` over vertex pairs."""
    E = as_matrix(E, cols=p.n, name="E")
    images = p.vertices @ E.T
    return _max_pairwise_distance(images[unique_points(images)])


def to_generic(p: Polytope) -> HPolytope:
    """Return an `HPolytope` copy of `p` carrying the known vertex list."""
    if isinstance(p, HPolytope):
        return p
    return HPolytope(p.A, p.a, vertices=p.vertices, vertex_cap=max(p.n, 1))


def polytope_to_dict(p: Polytope, include_h_form: bool = False) -> dict:
    data = {"kind": p.kind, "n": p.k if isinstance(p, LiftedL1Box) else p.n}
    if include_h_form or isinstance(p, HPolytope):
        data["A"] = p.A.tolist()
        data["a"] = p.a.tolist()
    return data


_STRUCTURED = {
    Simplex.kind: Simplex,
    L1Ball.kind: L1Ball,
    Box.kind: Box,
    LiftedL1Box.kind: LiftedL1Box,
}


def polytope_from_dict(data: dict) -> Polytope:
    kind = data.get("kind")
    if kind == HPolytope.kind:
        return HPolytope(data["A"], data["a"])
    try:
        cls = _STRUCTURED[kind]
    except KeyError:
        raise ValueError(f"unknown polytope kind {kind!r}")
    return cls(data["n"])


def random_point(p: Polytope, rng: np.random.Generator, support: int = 0) -> np.ndarray:
    """Draw a random convex combination of `support` random vertices of `p`.

    With ``support=0`` the combination uses ``n + 1`` vertices.  Vertices are
    drawn by id, so structured kinds are never enumerated.
    """
    count = support or p.n + 1
    ids = rng.integers(0, p.vertex_count, size=count)
    weights = rng.dirichlet(np.ones(count))
    return sum(w * p.vertex(int(i)) for w, i in zip(weights, ids))
