"""Input validation helpers used by the public API."""

from __future__ import annotations

import numpy as np

from .errors import IndexOutOfRange, InvalidParameter


def as_matrix(a, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array with finite entries."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise InvalidParameter(f"{name} must be 2-D, got shape {out.shape}")
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise InvalidParameter(f"{name} must be nonempty, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise InvalidParameter(f"{name} has non-finite entries")
    return out


def as_vector(a, name: str = "x") -> np.ndarray:
    """Coerce to a 1-D float64 array with finite entries."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 1:
        raise InvalidParameter(f"{name} must be 1-D, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise InvalidParameter(f"{name} has non-finite entries")
    return out


def as_square(a, name: str = "M") -> np.ndarray:
    out = as_matrix(a, name)
    if out.shape[0] != out.shape[1]:
        raise InvalidParameter(f"{name} must be square, got shape {out.shape}")
    return out


def as_symmetric(a, name: str = "S") -> np.ndarray:
    """Coerce to a square float64 array and require exact symmetry.

    Matrices produced by this package (gram, kernel_gram, samplers) are
    symmetric bit-for-bit by construction; use :func:`hollowpca.linalg.symmetrize`
    on anything that is only symmetric up to rounding.
    """
    out = as_square(a, name)
    if not np.array_equal(out, out.T):
        raise InvalidParameter(
            f"{name} must be exactly symmetric; use symmetrize() for "
            "matrices that are symmetric only up to rounding"
        )
    return out


def check_index(i: int, n: int, name: str = "index") -> int:
    i = int(i)
    if not 0 <= i < n:
        raise IndexOutOfRange(f"{name}={i} outside [0, {n})")
    return i


def as_labels(y, name: str = "y") -> np.ndarray:
    """Coerce to a 1-D integer label array."""
    out = np.asarray(y)
    if out.ndim != 1:
        raise InvalidParameter(f"{name} must be 1-D, got shape {out.shape}")
    if not np.issubdtype(out.dtype, np.integer):
        ints = np.asarray(out, dtype=np.int64)
        if not np.array_equal(ints, out):
            raise InvalidParameter(f"{name} must contain integers")
        out = ints
    return out.astype(np.int64, copy=False)


def check_binary_labels(y, name: str = "y") -> np.ndarray:
    out = as_labels(y, name)
    if not np.all(np.isin(out, (-1, 1))):
        raise InvalidParameter(f"{name} must take values in {{-1, +1}}")
    return out


def check_multiclass_labels(y, k: int, name: str = "y") -> np.ndarray:
    out = as_labels(y, name)
    if out.size and (out.min() < 1 or out.max() > k):
        raise InvalidParameter(f"{name} must take values in 1..{k}")
    return out


def is_binary_labels(y) -> bool:
    y = np.asarray(y)
    return bool(np.all(np.isin(y, (-1, 1))))
