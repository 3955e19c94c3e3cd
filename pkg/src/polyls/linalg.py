"""Dense linear-algebra primitives shared by the whole package.

Rank decisions use a relative singular-value threshold. All sparsity
guarantees downstream are exact-arithmetic statements, so every entry point
that depends on a rank exposes its tolerance instead of hiding it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Coefficient of the default relative rank threshold: rel_tol = coeff * max(shape).
RANK_TOL_COEFF = 1e-10


def default_rank_tol(n_rows: int, n_cols: int) -> float:
    """Default relative rank tolerance for an ``n_rows x n_cols`` matrix."""
    return RANK_TOL_COEFF * max(n_rows, n_cols, 1)


class DenseMatrix:
    """Column-major dense matrix with lazily cached per-column squared norms.

    The solver walks columns in its hot loop; keeping the storage
    Fortran-ordered makes each column a contiguous view, and the cached
    squared norms avoid recomputing them once per coordinate update.
    """

    __slots__ = ("_values", "_col_sq_norms")

    def __init__(self, values):
        arr = np.asfortranarray(np.asarray(values, dtype=float))
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got ndim={arr.ndim}")
        if not np.isfinite(arr).all():
            raise ValueError("matrix entries must be finite")
        self._values = arr
        self._col_sq_norms = None

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n_rows(self) -> int:
        return self._values.shape[0]

    @property
    def n_cols(self) -> int:
        return self._values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._values.shape

    @property
    def col_sq_norms(self) -> np.ndarray:
        if self._col_sq_norms is None:
            self._col_sq_norms = np.einsum(
                "ij,ij->j", self._values, self._values
            )
        return self._col_sq_norms

    def column(self, j: int) -> np.ndarray:
        return self._values[:, j]

    def __repr__(self):
        return f"DenseMatrix(shape={self._values.shape})"


def as_dense(M) -> DenseMatrix:
    """Coerce an array-like or DenseMatrix into a DenseMatrix."""
    if isinstance(M, DenseMatrix):
        return M
    return DenseMatrix(M)


def as_array(M) -> np.ndarray:
    """View the input as a plain 2-D float array without norm caching."""
    if isinstance(M, DenseMatrix):
        return M.values
    arr = np.asarray(M, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got ndim={arr.ndim}")
    return arr


@dataclass(frozen=True)
class RankFactorization:
    """Numerical rank of a matrix with orthonormal range and kernel bases.

    ``tolerance_used`` is the absolute singular-value threshold that was
    applied; singular values at or below it count as zero.
    """

    rank: int
    range_basis: np.ndarray  # n_rows x rank, orthonormal columns
    null_basis: np.ndarray   # n_cols x (n_cols - rank), orthonormal columns
    tolerance_used: float


def _orient_columns(B: np.ndarray) -> np.ndarray:
    """Flip column signs so each column's largest-magnitude entry is positive.

    SVD basis signs are implementation-defined; fixing an orientation keeps
    every downstream direction choice deterministic.
    """
    if B.size == 0:
        return B
    idx = np.argmax(np.abs(B), axis=0)
    signs = np.sign(B[idx, np.arange(B.shape[1])])
    signs[signs == 0] = 1.0
    return B * signs


def rank_factor(M, rel_tol: float | None = None) -> RankFactorization:
    """Rank-revealing orthogonal factorization of a dense matrix.

    Parameters
    ----------
    M : array-like or DenseMatrix
        Matrix to factor; all entries finite.
    rel_tol : float, optional
        Relative threshold on singular values. Defaults to
        ``1e-10 * max(n_rows, n_cols)``. The absolute threshold actually
        applied is ``rel_tol * sigma_max``.

    Returns
    -------
    RankFactorization
        ``rank + null_basis.shape[1] == n_cols`` always holds, and
        ``max|M @ null_basis|`` is at or below ``tolerance_used``.
    """
    A = as_array(M)
    n, p = A.shape
    if rel_tol is None:
        rel_tol = default_rank_tol(n, p)
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    if n == 0 or p == 0:
        null = np.eye(p) if n == 0 else np.zeros((p, 0))
        return RankFactorization(0, np.zeros((n, 0)), null, 0.0)
    U, s, Vh = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if s.size else 0.0
    thresh = rel_tol * smax
    rank = int(np.count_nonzero(s > thresh))
    null_basis = _orient_columns(Vh[rank:].T.copy())
    range_basis = _orient_columns(U[:, :rank].copy())
    return RankFactorization(rank, range_basis, null_basis, thresh)


def solve_ls_equality(M, x) -> np.ndarray:
    """Minimum-norm ``w`` minimizing ``||M w - x||_2`` (pseudoinverse solve)."""
    A = as_array(M)
    xv = np.asarray(x, dtype=float).ravel()
    if xv.shape[0] != A.shape[0]:
        raise ValueError(
            f"rhs length {xv.shape[0]} does not match {A.shape[0]} rows"
        )
    if A.shape[1] == 0:
        return np.zeros(0)
    if A.shape[0] == 0:
        return np.zeros(A.shape[1])
    w, *_ = np.linalg.lstsq(A, xv, rcond=None)
    return w
