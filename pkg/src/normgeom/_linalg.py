"""Small dense linear-algebra helpers shared across the package."""

from __future__ import annotations

from typing import Callable

import numpy as np
from numpy.typing import NDArray

Array = NDArray[np.float64]


def frozen_copy(a, shape=None) -> Array:
    """Owned, read-only float copy of an array-like."""
    out = np.array(a, dtype=float)
    if shape is not None and out.shape != shape:
        raise ValueError(f"expected shape {shape}, got {out.shape}")
    out.setflags(write=False)
    return out


def orthonormal_complement(row: Array) -> Array:
    """Orthonormal basis (as rows) of the hyperplane {x : row @ x = 0}.

    Uses the SVD of the single row, which stays stable when the row is
    nearly axis-aligned.
    """
    row = np.asarray(row, dtype=float)
    if row.ndim != 1 or row.size == 0:
        raise ValueError("expected a single nonempty row functional")
    scale = np.linalg.norm(row)
    if scale == 0.0 or not np.isfinite(scale):
        raise ValueError("cannot complete a zero or non-finite row")
    _, _, vt = np.linalg.svd(row.reshape(1, -1))
    return vt[1:]


def oblique_projection(onto_rows: Array, along_rows: Array) -> Array:
    """Matrix of the projection with range span(onto) and kernel span(along).

    Both inputs are stacked row-wise; together they must form a basis of
    the ambient space.
    """
    onto = np.atleast_2d(np.asarray(onto_rows, dtype=float))
    along = np.atleast_2d(np.asarray(along_rows, dtype=float))
    n = onto.shape[1]
    if along.shape[1] != n:
        raise ValueError("subspace bases live in different ambient dimensions")
    stacked = np.vstack([onto, along])
    if stacked.shape[0] != n or np.linalg.matrix_rank(stacked) < n:
        raise ValueError("the two subspaces do not form a direct sum")
    k = onto.shape[0]
    inv = np.linalg.solve(stacked.T, np.eye(n))
    return onto.T @ inv[:k]


def operator_norm(mat: Array, n_iter: int = 200, rtol: float = 1e-12,
                  seed: int = 0) -> float:
    """Largest singular value via power iteration on mat.T @ mat."""
    a = np.asarray(mat, dtype=float)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(n_iter):
        w = a @ v
        estimate = float(np.linalg.norm(w))
        if estimate == 0.0:
            return 0.0
        if abs(estimate - sigma) <= rtol * estimate:
            return estimate
        sigma = estimate
        v = a.T @ w
        v /= np.linalg.norm(v)
    return sigma


def extrapolate_to_zero(steps, values) -> float:
    """Neville polynomial extrapolation of samples (step, value) to step -> 0."""
    t = np.asarray(steps, dtype=float)
    q = np.asarray(values, dtype=float).copy()
    n = t.size
    for level in range(1, n):
        for i in range(n - level):
            q[i] = (t[i] * q[i + 1] - t[i + level] * q[i]) / (t[i] - t[i + level])
    return float(q[0])


def fd_jacobian(func: Callable[[Array], Array], x: Array, step: float = 1e-6) -> Array:
    """Central-difference Jacobian of a vector-valued map."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        unit = np.zeros_like(x)
        unit[i] = step
        hi = np.asarray(func(x + unit), dtype=float)
        lo = np.asarray(func(x - unit), dtype=float)
        cols.append((hi - lo) / (2.0 * step))
    return np.stack(cols, axis=1)
