"""Dense symmetric linear algebra primitives.

Gram products, the hollowing operator (zeroing a square matrix's diagonal),
symmetric eigendecomposition with explicit ordering and sign conventions,
small-matrix SVD, the matrix sign function (orthogonal polar factor), and
row-wise l_{2,p} norms.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._validation import as_matrix, as_square, as_symmetric
from .errors import ConvergenceFailure, IndexOutOfRange, InvalidParameter, RankDeficient

__all__ = [
    "DESCENDING_BY_VALUE",
    "DESCENDING_BY_ABS",
    "EigenDecomposition",
    "hollow",
    "symmetrize",
    "gram",
    "eigh",
    "top_window",
    "svd_small",
    "matrix_sign",
    "norm_2p",
]

#: Eigenvalues sorted from largest to smallest.
DESCENDING_BY_VALUE = "value"
#: Eigenvalues sorted by decreasing absolute value (ties: larger value first).
DESCENDING_BY_ABS = "abs"

_ORDERINGS = (DESCENDING_BY_VALUE, DESCENDING_BY_ABS)

_DEFAULT_TOL = 1e-10

# Above this size, windowed decompositions use the LAPACK subset driver
# instead of slicing a full decomposition.  Both are dense O(n^3) methods;
# the choice is a deterministic function of n.
_DENSE_WINDOW_MAX_N = 1024

#: Singular values at or below this are treated as a rank deficiency.
_RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Sorted eigenvalues with an orthonormal eigenvector block.

    Attributes
    ----------
    values : ndarray
        Eigenvalues sorted per `ordering`.
    vectors : ndarray, shape (n, len(values))
        Orthonormal eigenvectors, column j belonging to values[j].  Each
        column is normalized so that its largest-magnitude entry is positive.
    ordering : str
        Either ``"value"`` (descending by value) or ``"abs"`` (descending by
        absolute value).
    residual : float
        max_j ||S v_j - lambda_j v_j||_2 / max(1, ||S||_F) over the columns
        present in this decomposition.
    """

    values: np.ndarray
    vectors: np.ndarray
    ordering: str
    residual: float


def hollow(m) -> np.ndarray:
    """Return a copy of a square matrix with its diagonal zeroed.

    Off-diagonal entries are bit-identical to the input.  The input may be
    any square matrix (the hollowing operator is applied to nonsymmetric
    products like Z X^T as well as to Gram matrices).
    """
    out = as_square(m, "M").copy()
    np.fill_diagonal(out, 0.0)
    return out


def symmetrize(m) -> np.ndarray:
    """(M + M^T) / 2, which is exactly symmetric in floating point."""
    m = as_square(m, "M")
    return (m + m.T) / 2.0


def gram(x) -> np.ndarray:
    """Pairwise inner products <x_i, x_j> of the rows of ``x``.

    The result is exactly symmetric and positive semidefinite up to rounding.
    """
    x = as_matrix(x, "X")
    return symmetrize(x @ x.T)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so each column's largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _order_indices(values: np.ndarray, ordering: str) -> np.ndarray:
    if ordering == DESCENDING_BY_VALUE:
        return np.argsort(-values, kind="stable")
    # descending by |value|, ties broken toward the larger signed value
    return np.lexsort((-values, -np.abs(values)))


def _window_residual(s: np.ndarray, values: np.ndarray, vectors: np.ndarray) -> float:
    resid = s @ vectors - vectors * values
    col_norms = np.linalg.norm(resid, axis=0)
    return float(col_norms.max(initial=0.0) / max(1.0, np.linalg.norm(s)))


def eigh(s, ordering: str = DESCENDING_BY_VALUE, tol: float = _DEFAULT_TOL) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    s : array_like
        Exactly symmetric matrix.
    ordering : str
        ``"value"`` or ``"abs"``; see module constants.
    tol : float
        Residual tolerance, relative to max(1, ||S||_F).

    Raises
    ------
    ConvergenceFailure
        If the decomposition's residual exceeds ``tol``.
    """
    s = as_symmetric(s, "S")
    if ordering not in _ORDERINGS:
        raise InvalidParameter(f"ordering must be one of {_ORDERINGS}, got {ordering!r}")
    if not tol > 0:
        raise InvalidParameter("tol must be positive")
    try:
        values, vectors = np.linalg.eigh(s)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails
        raise ConvergenceFailure(str(exc)) from exc
    order = _order_indices(values, ordering)
    values = values[order]
    vectors = _fix_signs(vectors[:, order])
    residual = _window_residual(s, values, vectors)
    if residual > tol:
        raise ConvergenceFailure(
            f"eigendecomposition residual {residual:.3e} exceeds tol {tol:.3e}"
        )
    return EigenDecomposition(values=values, vectors=vectors, ordering=ordering, residual=residual)


def top_window(e: EigenDecomposition, s: int, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs at positions s..s+r-1 (0-based) under the decomposition's ordering."""
    m = len(e.values)
    s = int(s)
    r = int(r)
    if r < 1 or s < 0 or s + r > m:
        raise IndexOutOfRange(f"window (s={s}, r={r}) invalid for {m} eigenpairs")
    return e.values[s : s + r].copy(), e.vectors[:, s : s + r].copy()


def window_eigh(
    s_matrix,
    start: int,
    count: int,
    ordering: str = DESCENDING_BY_VALUE,
    tol: float = _DEFAULT_TOL,
) -> EigenDecomposition:
    """Eigendecomposition restricted to the window start..start+count-1.

    Equivalent to slicing :func:`eigh` with :func:`top_window`, but for large
    matrices with a value-ordered window it calls the LAPACK subset driver,
    which avoids computing eigenvectors outside the window.
    """
    s_matrix = as_symmetric(s_matrix, "S")
    n = s_matrix.shape[0]
    if count < 1 or start < 0 or start + count > n:
        raise IndexOutOfRange(f"window (s={start}, r={count}) invalid for dim {n}")
    if ordering not in _ORDERINGS:
        raise InvalidParameter(f"ordering must be one of {_ORDERINGS}, got {ordering!r}")
    if not tol > 0:
        raise InvalidParameter("tol must be positive")

    if n <= _DENSE_WINDOW_MAX_N or ordering != DESCENDING_BY_VALUE:
        full = eigh(s_matrix, ordering=ordering, tol=tol)
        values, vectors = top_window(full, start, count)
        return EigenDecomposition(
            values=values, vectors=vectors, ordering=ordering, residual=full.residual
        )

    lo = n - (start + count)
    hi = n - start - 1
    try:
        values, vectors = scipy.linalg.eigh(
            s_matrix, subset_by_index=(lo, hi), check_finite=False
        )
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise ConvergenceFailure(str(exc)) from exc
    values = values[::-1]
    vectors = _fix_signs(np.ascontiguousarray(vectors[:, ::-1]))
    residual = _window_residual(s_matrix, values, vectors)
    if residual > tol:
        raise ConvergenceFailure(
            f"windowed eigendecomposition residual {residual:.3e} exceeds tol {tol:.3e}"
        )
    return EigenDecomposition(values=values, vectors=vectors, ordering=ordering, residual=residual)


def svd_small(h) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Singular value decomposition H = U diag(s) Vt of a small square matrix.

    Returns (U, s, Vt) with s nonnegative descending and U, Vt orthonormal.
    """
    h = as_square(h, "H")
    try:
        u, s, vt = np.linalg.svd(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise ConvergenceFailure(str(exc)) from exc
    err = np.linalg.norm(u @ np.diag(s) @ vt - h)
    if err > 1e-10 * max(1.0, np.linalg.norm(h)):
        raise ConvergenceFailure(f"SVD reconstruction error {err:.3e}")  # pragma: no cover
    return u, s, vt


def matrix_sign(h) -> np.ndarray:
    """Matrix sign function: the orthogonal polar factor U Vt of H.

    For 1x1 input this reduces to the scalar sign.  Raises
    :class:`RankDeficient` when any singular value is at or below 1e-12,
    which signals an ambiguous alignment between nearly orthogonal
    eigenspaces.
    """
    u, s, vt = svd_small(h)
    if s.min(initial=np.inf) <= _RANK_TOL:
        raise RankDeficient(
            f"matrix sign undefined: smallest singular value {s.min():.3e} <= {_RANK_TOL}"
        )
    return u @ vt


def norm_2p(a, p) -> float:
    """l_{2,p} norm: the l_p norm of the vector of row l_2 norms.

    For a matrix this is (sum_i ||A_i||_2^p)^(1/p); p = 2 gives the Frobenius
    norm and p = math.inf the maximum row norm.  For a vector it equals the
    ordinary l_p norm.  Pass ``math.inf`` (the IEEE infinity) for p = infinity;
    do not approximate it with a large float.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        rows = np.abs(arr)
    elif arr.ndim == 2:
        rows = np.linalg.norm(arr, axis=1)
    else:
        raise InvalidParameter(f"expected a vector or matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameter("input has non-finite entries")

    p = float(p)
    if math.isinf(p):
        return float(rows.max(initial=0.0))
    if not p >= 1.0:
        raise InvalidParameter(f"p must be >= 1 or math.inf, got {p}")
    m = float(rows.max(initial=0.0))
    if m == 0.0:
        return 0.0
    # scale by the max row norm so large p cannot overflow
    return m * float(np.sum((rows / m) ** p)) ** (1.0 / p)
