"""Numeric rank and nullspace with a relative tolerance.

The tolerance scales with the largest absolute entry times the matrix
dimension, so uniformly rescaling a sheaf's matrices never changes any
rank or Betti number.
"""

from __future__ import annotations

import numpy as np

RANK_REL_TOL = 1e-9


def _threshold(m: np.ndarray, rel_tol: float) -> float:
    peak = float(np.max(np.abs(m))) if m.size else 0.0
    return rel_tol * peak * max(m.shape)


def numeric_rank(m, rel_tol: float = RANK_REL_TOL) -> int:
    """Rank via column-pivoted Gaussian elimination."""
    a = np.array(m, dtype=float, copy=True)
    if a.size == 0:
        return 0
    tol = _threshold(a, rel_tol)
    if tol == 0.0:
        return 0
    rows, cols = a.shape
    rank = 0
    row = 0
    for col in range(cols):
        pivot = row + int(np.argmax(np.abs(a[row:, col]))) if row < rows else row
        if row >= rows or abs(a[pivot, col]) <= tol:
            continue
        if pivot != row:
            a[[row, pivot]] = a[[pivot, row]]
        a[row + 1:] -= np.outer(a[row + 1:, col] / a[row, col], a[row])
        rank += 1
        row += 1
        if row == rows:
            break
    return rank


def nullspace(m, rel_tol: float = RANK_REL_TOL) -> np.ndarray:
    """Orthonormal basis of the kernel, columns of the returned matrix."""
    a = np.asarray(m, dtype=float)
    if a.size == 0:
        return np.eye(a.shape[1] if a.ndim == 2 else 0)
    _, s, vh = np.linalg.svd(a)
    tol = rel_tol * float(np.max(np.abs(a))) * max(a.shape)
    rank = int(np.sum(s > tol))
    return vh[rank:].T.copy()
