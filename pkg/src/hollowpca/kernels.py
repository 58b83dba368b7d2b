"""Kernel Gram matrices for the hollowed spectral pipeline.

A kernel Gram matrix K_{ij} = k(x_i, x_j) can be hollowed and fed to the
same estimators as the plain Gram matrix, so the whole pipeline runs in a
reproducing-kernel setting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ._validation import as_matrix
from .errors import InvalidParameter
from .linalg import gram

__all__ = ["KernelSpec", "kernel_gram"]

_KINDS = ("linear", "gaussian", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    """A kernel choice with its parameters.

    Build instances through the classmethods: ``KernelSpec.linear()``,
    ``KernelSpec.gaussian(eta)`` for k(x,y) = exp(-eta ||x-y||^2), and
    ``KernelSpec.polynomial(degree, offset)`` for k(x,y) = (<x,y> + offset)^degree.
    """

    kind: str
    eta: float | None = None
    degree: int | None = None
    offset: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidParameter(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian":
            if self.eta is None or not self.eta > 0:
                raise InvalidParameter("gaussian kernel requires eta > 0")
        if self.kind == "polynomial":
            if self.degree is None or int(self.degree) < 1:
                raise InvalidParameter("polynomial kernel requires degree >= 1")
            if self.offset is None or self.offset < 0:
                raise InvalidParameter("polynomial kernel requires offset >= 0")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(kind="linear")

    @classmethod
    def gaussian(cls, eta: float) -> "KernelSpec":
        return cls(kind="gaussian", eta=float(eta))

    @classmethod
    def polynomial(cls, degree: int, offset: float = 0.0) -> "KernelSpec":
        return cls(kind="polynomial", degree=int(degree), offset=float(offset))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "gaussian":
            d["eta"] = self.eta
        elif self.kind == "polynomial":
            d["degree"] = self.degree
            d["offset"] = self.offset
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        kind = d.get("kind")
        if kind == "linear":
            return cls.linear()
        if kind == "gaussian":
            return cls.gaussian(d.get("eta", 0.0))
        if kind == "polynomial":
            return cls.polynomial(d.get("degree", 0), d.get("offset", 0.0))
        raise InvalidParameter(f"unknown kernel kind {kind!r}")


def kernel_gram(x, spec: KernelSpec) -> np.ndarray:
    """Kernel Gram matrix K with K[i, j] = k(x_i, x_j) over the rows of ``x``.

    The linear kernel reproduces ``gram(x)`` bit for bit.  The Gaussian
    kernel has unit diagonal exactly and entries in (0, 1].
    """
    x = as_matrix(x, "X")
    if spec.kind == "linear":
        return gram(x)
    if spec.kind == "gaussian":
        sq_dists = squareform(pdist(x, metric="sqeuclidean"))
        return np.exp(-spec.eta * sq_dists)
    # polynomial: entrywise power of an exactly symmetric matrix stays symmetric
    return (gram(x) + spec.offset) ** spec.degree
