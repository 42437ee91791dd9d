from typing import List, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, NonFinite


def as_vector(x, n: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """Coerce `x` to a finite 1-d float array, optionally of length `n`."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise NonFinite(f"{name} has non-finite entries")
    return v


def as_matrix(M, rows: Optional[int] = None, cols: Optional[int] = None, name="matrix"):
    """Coerce `M` to a finite 2-d float array with the given (optional) shape."""
    A = np.asarray(M, dtype=float)
    if A.ndim == 1 and cols is not None and A.size == cols:
        A = A.reshape(1, cols)
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional, got shape {A.shape}")
    if rows is not None and A.shape[0] != rows:
        raise DimensionMismatch(f"{name} has {A.shape[0]} rows, expected {rows}")
    if cols is not None and A.shape[1] != cols:
        raise DimensionMismatch(f"{name} has {A.shape[1]} columns, expected {cols}")
    if not np.all(np.isfinite(A)):
        raise NonFinite(f"{name} has non-finite entries")
    return A


def intersection(*seqs):
    return (item for item in seqs[0] if all(item in seq for seq in seqs[1:]))


def unique_points(points: np.ndarray, tol: float = 1e-9) -> List[int]:
    """Return the indices of the first occurrence of each point up to `tol`.

    Two points are the same when their max-norm distance is at most `tol`.

    >>> unique_points(np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 1.0 + 1e-12]]))
    [0, 1]
    """
    kept: List[int] = []
    for i, p in enumerate(points):
        if not any(np.max(np.abs(points[j] - p)) <= tol for j in kept):
            kept.append(i)
    return kept


def lexicographic_order(points: np.ndarray) -> np.ndarray:
    """Return the permutation sorting the rows of `points` lexicographically."""
    if len(points) == 0:
        return np.zeros(0, dtype=int)
    # `np.lexsort` treats the last key as the primary one
    return np.lexsort(points.T[::-1])


def affine_rank(points: np.ndarray, tol: float = 1e-9) -> int:
    """Return the dimension of the affine hull of the rows of `points`."""
    if len(points) <= 1:
        return 0
    diffs = points[1:] - points[0]
    return int(np.linalg.matrix_rank(diffs, tol=tol))


def first_minimizer(values: Sequence[float], tol: float = 0.0) -> int:
    """Return the first index whose value is within `tol` of the minimum.

    >>> first_minimizer([3.0, 1.0, 1.0, 2.0])
    1
    """
    values = np.asarray(values, dtype=float)
    best = values.min()
    scale = tol * max(1.0, abs(best))
    return int(np.flatnonzero(values <= best + scale)[0])


def spawn_rngs(seed: Optional[int], count: int) -> List[np.random.Generator]:
    """Derive `count` independent generators from a single seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(s) for s in children]
