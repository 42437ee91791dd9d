"""Carathéodory reduction of convex representations.

`reduce_full` reduces a weighted point list from scratch: points are added
one at a time and, whenever the newest point is affinely dependent on the
kept ones, the unique affine dependency is used to zero out at least one
weight.

`irr_update` does the same incrementally.  It keeps the difference matrix
``W = T V`` in row echelon form, where column ``j`` of ``V`` is
``v^(j+1) - v^0`` for the kept vertices in order and ``T`` accumulates the
row operations, so that a new vertex costs ``O(n^2)`` instead of a fresh
factorization.  The first vertex in the ordering is the reference vertex.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InconsistentState, SingularSolve


logger = logging.getLogger(__name__)

ZERO_WEIGHT_TOL = 1e-12
RANK_TOL = 1e-9
VERIFY_TOL = 1e-8
REFACTOR_EVERY = 64


@dataclass(frozen=True)
class AddVertex:
    vertex_id: int


@dataclass(frozen=True)
class DropVertex:
    vertex_id: int


Event = Optional[Union[AddVertex, DropVertex]]


@dataclass
class IrrState:
    """The echelon factor of the current representation.

    ``order`` lists the vertex ids with the reference vertex first; ``W`` has
    one column per non-reference vertex.
    """

    order: List[int]
    W: np.ndarray
    T: np.ndarray
    events: int = field(default=0)

    @property
    def L(self) -> int:
        return len(self.order)

    @property
    def reference(self) -> int:
        return self.order[0]

    @classmethod
    def single(cls, vertex_id: int, n: int) -> "IrrState":
        return cls([vertex_id], np.zeros((n, 0)), np.eye(n))

    def copy(self) -> "IrrState":
        return IrrState(list(self.order), self.W.copy(), self.T.copy(), self.events)


def _eliminate_column(W, T, col, tol):
    """Place a pivot for column `col` in row `col` using partial pivoting.

    Rows below the pivot are cleared in `W`; the same operations are applied
    to `T`.  Returns False, after zeroing the sub-column, when no entry
    exceeds `tol`.
    """
    row = col
    if row >= W.shape[0]:
        return False
    sub = np.abs(W[row:, col])
    k = row + int(np.argmax(sub))
    if sub.max() <= tol:
        W[row:, col] = 0.0
        return False
    if k != row:
        W[[row, k]] = W[[k, row]]
        T[[row, k]] = T[[k, row]]
    factors = W[row + 1 :, col] / W[row, col]
    if np.any(factors):
        W[row + 1 :] -= np.outer(factors, W[row])
        T[row + 1 :] -= np.outer(factors, T[row])
    W[row + 1 :, col] = 0.0
    return True


def _column_tol(column, rank_tol):
    return rank_tol * max(1.0, float(np.abs(column).max(initial=0.0)))


def _echelonize_from(W, T, start, rank_tol):
    for col in range(start, W.shape[1]):
        if not _eliminate_column(W, T, col, _column_tol(W[:, col], rank_tol)):
            raise InconsistentState(
                f"column {col} lost its pivot; the kept vertices are affinely dependent"
            )


def irr_initialize(
    ids: Sequence[int], vertices: np.ndarray, rank_tol: float = RANK_TOL
) -> IrrState:
    """Factor an affinely independent vertex list from scratch."""
    vertices = np.asarray(vertices, dtype=float)
    n = vertices.shape[1]
    W = (vertices[1:] - vertices[0]).T.copy().reshape(n, len(ids) - 1)
    T = np.eye(n)
    _echelonize_from(W, T, 0, rank_tol)
    return IrrState(list(ids), W, T)


def _affine_dependency(lam: np.ndarray) -> np.ndarray:
    """Lift ``lam`` (with ``V lam = 0``) to point coefficients summing to zero."""
    return np.concatenate([[-lam.sum()], lam])


def _apply_dependency(
    weights: np.ndarray, lam_tilde: np.ndarray, zero_tol: float
) -> Tuple[np.ndarray, List[int]]:
    """Move along ``lam_tilde`` until a weight vanishes.

    The step keeps the reference weight from decreasing, so the reference is
    never removed, even when its weight is already below `zero_tol`.  Every
    other weight that reaches `zero_tol` is removed; the returned positions
    index `weights`.
    """
    neg = lam_tilde < 0
    pos = lam_tilde > 0
    if lam_tilde[0] >= 0:
        alpha = np.min(-weights[neg] / lam_tilde[neg])
    else:
        alpha = np.max(-weights[pos] / lam_tilde[pos])
    updated = weights + alpha * lam_tilde
    removed = [int(i) for i in np.flatnonzero(updated[1:] <= zero_tol) + 1]
    return updated, removed


def _drop_positions(state: IrrState, weights, removed):
    keep = [i for i in range(state.L) if i not in removed]
    state.order = [state.order[i] for i in keep]
    state.W = np.delete(state.W, [i - 1 for i in removed], axis=1)
    kept_weights = weights[keep]
    return kept_weights / kept_weights.sum()


def irr_update(
    state: IrrState,
    ids: Sequence[int],
    vertices: np.ndarray,
    weights: np.ndarray,
    event: Event,
    zero_tol: float = ZERO_WEIGHT_TOL,
    rank_tol: float = RANK_TOL,
    refactor_every: int = REFACTOR_EVERY,
) -> Tuple[IrrState, List[int], np.ndarray]:
    """Update the factor after one solver step and reduce the representation.

    Parameters
    ----------
    state
        The factor of the representation before the step.
    ids, vertices, weights
        The representation after the step, in factor order, with an added
        vertex last.
    event
        What the step did to the vertex set: `AddVertex`, `DropVertex` or
        `None` when the set is unchanged.

    Returns
    -------
    The new factor, the kept ids and their weights.  The represented point is
    unchanged.
    """
    ids = list(ids)
    vertices = np.asarray(vertices, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = vertices.shape[1]

    if len(ids) == 1:
        return IrrState.single(ids[0], n), ids, np.ones(1)

    if event is None:
        if ids != state.order:
            raise InconsistentState(f"order {state.order} does not match ids {ids}")
        return state, ids, weights

    new = state.copy()

    if isinstance(event, DropVertex):
        pos = new.order.index(event.vertex_id)
        del new.order[pos]
        if ids != new.order:
            raise InconsistentState(f"drop of {event.vertex_id} does not give {ids}")
        if pos == 0:
            # The next vertex becomes the reference: w'_j = w_(j+1) - w_1.
            new.W = new.W[:, 1:] - new.W[:, [0]]
            start = 0
        else:
            new.W = np.delete(new.W, pos - 1, axis=1)
            start = pos - 1
        _echelonize_from(new.W, new.T, start, rank_tol)

    elif isinstance(event, AddVertex):
        if ids != new.order + [event.vertex_id]:
            raise InconsistentState(f"add of {event.vertex_id} does not give {ids}")
        column = new.T @ (vertices[-1] - vertices[0])
        col = new.W.shape[1]
        new.W = np.hstack([new.W, column[:, None]])
        new.order.append(event.vertex_id)

        if not _eliminate_column(new.W, new.T, col, _column_tol(column, rank_tol)):
            lam = _solve_dependency(new.W, col)
            updated, removed = _apply_dependency(
                weights, _affine_dependency(np.append(lam, -1.0)), zero_tol
            )
            weights = _drop_positions(new, updated, removed)
            vertices = np.delete(vertices, removed, axis=0)
            _echelonize_from(new.W, new.T, min(removed) - 1, rank_tol)
            logger.debug(
                "affine dependency on %d vertices removed %d", len(ids), len(removed)
            )
        ids = list(new.order)

    else:
        raise TypeError(f"unknown event {event!r}")

    new.events += 1
    if refactor_every and new.events % refactor_every == 0:
        logger.debug("refactorizing after %d events", new.events)
        events = new.events
        new = irr_initialize(ids, vertices, rank_tol)
        new.events = events

    return new, ids, weights


def _solve_dependency(W, col):
    """Solve ``W[:, :col] lam = W[:, col]`` on the upper-triangular block."""
    if col == 0:
        return np.zeros(0)
    U = W[:col, :col]
    diag = np.abs(np.diag(U))
    if diag.min() <= np.finfo(float).eps * max(1.0, diag.max()):
        raise SingularSolve("the echelon block has a vanishing pivot")
    return solve_triangular(U, W[:col, col], lower=False)


def verify_factor(
    state: IrrState,
    ids: Sequence[int],
    vertices: np.ndarray,
    tol: float = VERIFY_TOL,
):
    """Check ``W = T V`` and the echelon structure of ``W``."""
    if list(ids) != state.order:
        raise InconsistentState(f"order {state.order} does not match ids {list(ids)}")
    vertices = np.asarray(vertices, dtype=float)
    V = (vertices[1:] - vertices[0]).T
    if state.W.shape != V.shape:
        raise InconsistentState(f"W has shape {state.W.shape}, expected {V.shape}")
    err = np.abs(state.W - state.T @ V).max(initial=0.0)
    if err > tol:
        raise InconsistentState(f"|W - T V| = {err:.3g} exceeds {tol}")
    for j in range(state.W.shape[1]):
        if state.W[j, j] == 0 or np.any(state.W[j + 1 :, j]):
            raise InconsistentState(f"column {j} of W is not in echelon form")


def reduce_full(
    points,
    weights,
    zero_tol: float = ZERO_WEIGHT_TOL,
    rank_tol: float = RANK_TOL,
) -> Tuple[List[int], np.ndarray]:
    """Reduce a convex combination to affinely independent support.

    Returns the indices of the kept points and their weights; the weighted
    sum of the kept points equals that of the input.

    >>> kept, mu = reduce_full([[0.0], [1.0], [0.5]], [0.2, 0.2, 0.6])
    >>> kept, mu.round(6).tolist()
    ([0, 1], [0.5, 0.5])
    """
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    kept = [0]
    mu = weights[:1].copy()
    for i in range(1, len(points)):
        kept.append(i)
        mu = np.append(mu, weights[i])
        V = (points[kept[1:]] - points[kept[0]]).T
        tol = _column_tol(V[:, -1], rank_tol)
        if np.linalg.matrix_rank(V, tol=tol) == V.shape[1]:
            continue
        if V.shape[1] == 1:
            # the newest point coincides with the reference
            lam = np.zeros(0)
        else:
            lam = np.linalg.lstsq(V[:, :-1], V[:, -1], rcond=None)[0]
        updated, removed = _apply_dependency(
            mu, _affine_dependency(np.append(lam, -1.0)), zero_tol
        )
        keep = [j for j in range(len(kept)) if j not in removed]
        kept = [kept[j] for j in keep]
        mu = updated[keep] / updated[keep].sum()
    return kept, mu
