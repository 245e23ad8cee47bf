"""Dense real matrix kernels for small matrices.

Everything in here targets matrices of order ~12 or less, so plain
O(n^3) loops are used throughout: easy to audit, fast enough at these
sizes.  Floating point work is done on float64 numpy arrays; integer
rank computations use exact Python integers so that linear independence
checks over the integers can never be fooled by rounding.
"""

from __future__ import annotations

import numpy as np

SYMMETRY_RTOL = 1e-10
PIVOT_RTOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class NotPositiveDefinite(Exception):
    """A Cholesky pivot fell at or below tolerance."""


class NoConvergence(Exception):
    """The Jacobi eigensolver did not converge within the sweep cap."""


def _as_square_symmetric(a, rtol=SYMMETRY_RTOL):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = float(np.abs(a).max()) if a.size else 0.0
    if scale > 0.0 and float(np.abs(a - a.T).max()) > rtol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    return 0.5 * (a + a.T)


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L @ L.T == a for symmetric positive definite a.

    Raises NotPositiveDefinite when a pivot drops to PIVOT_RTOL times the
    largest diagonal entry or below.
    """
    a = _as_square_symmetric(a)
    n = a.shape[0]
    tol = PIVOT_RTOL * float(a.diagonal().max(initial=0.0))
    low = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - np.dot(low[j, :j], low[j, :j])
        if d <= tol:
            raise NotPositiveDefinite(f"pivot {d:.3e} at column {j} (tol {tol:.3e})")
        low[j, j] = np.sqrt(d)
        for i in range(j + 1, n):
            low[i, j] = (a[i, j] - np.dot(low[i, :j], low[j, :j])) / low[j, j]
    return low


def solve_cholesky(low: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve (L @ L.T) x = b given the lower Cholesky factor L."""
    b = np.asarray(b, dtype=float)
    vector = b.ndim == 1
    y = b.reshape(b.shape[0], -1).copy()
    n = low.shape[0]
    if y.shape[0] != n:
        raise ValueError("dimension mismatch between factor and right-hand side")
    for i in range(n):  # forward substitution
        y[i] -= low[i, :i] @ y[:i]
        y[i] /= low[i, i]
    for i in range(n - 1, -1, -1):  # back substitution with L.T
        y[i] -= low[i + 1:, i] @ y[i + 1:]
        y[i] /= low[i, i]
    return y[:, 0] if vector else y


def solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ x = b for symmetric positive definite a."""
    return solve_cholesky(cholesky(a), b)


def eig_sym(a: np.ndarray, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvalues ascending and the
    eigenvectors as the corresponding columns of an orthogonal matrix.
    """
    a = _as_square_symmetric(a).copy()
    n = a.shape[0]
    vec = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), vec
    scale = float(np.sqrt((a * a).sum()))
    if scale == 0.0:
        return np.zeros(n), vec
    threshold = 1e-14 * scale
    for _ in range(max_sweeps):
        off = float(np.sqrt(2.0 * (np.triu(a, 1) ** 2).sum()))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-30 * scale:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                cos = 1.0 / np.sqrt(t * t + 1.0)
                sin = t * cos
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = cos * rp - sin * rq
                a[q, :] = sin * rp + cos * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = cos * cp - sin * cq
                a[:, q] = sin * cp + cos * cq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp, vq = vec[:, p].copy(), vec[:, q].copy()
                vec[:, p] = cos * vp - sin * vq
                vec[:, q] = sin * vp + cos * vq
    else:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    order = np.argsort(a.diagonal(), kind="stable")
    return a.diagonal()[order].copy(), vec[:, order]


def max_singular_value(a: np.ndarray) -> float:
    """Largest singular value, from the Gram matrix of the smaller side."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.size == 0:
        raise ValueError("matrix must be nonempty")
    gram = a @ a.T if a.shape[0] <= a.shape[1] else a.T @ a
    vals, _ = eig_sym(gram)
    return float(np.sqrt(max(float(vals[-1]), 0.0)))


def integer_rank(vectors) -> int:
    """Exact rank over the rationals of a family of integer vectors.

    Fraction-free Gaussian elimination on arbitrary-precision integers, so
    near-parallel vectors are classified exactly rather than by a floating
    tolerance.
    """
    rows = [[int(x) for x in v] for v in vectors]
    if not rows:
        return 0
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("all vectors must have the same length")
    rank = 0
    col = 0
    while rank < len(rows) and col < width:
        pivot_row = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if pivot_row is None:
            col += 1
            continue
        rows[rank], rows[pivot_row] = rows[pivot_row], rows[rank]
        pivot = rows[rank][col]
        for i in range(rank + 1, len(rows)):
            if rows[i][col] == 0:
                continue
            factor = rows[i][col]
            rows[i] = [pivot * rij - factor * rkj for rij, rkj in zip(rows[i], rows[rank])]
        rank += 1
        col += 1
    return rank
