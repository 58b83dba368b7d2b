"""Seeded samplers for the generative models driving every experiment.

Provides the hierarchical :class:`Seed`, label containers, and samplers for
Gaussian mixtures (binary and multiclass, heteroscedastic noise allowed),
the stochastic block model, and the contextual SBM that pairs a graph with
Gaussian node attributes.

All samplers are pure functions of (params, seed): replicates drawn from
distinct seed streams are independent, and the same seed always reproduces
the same draw regardless of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_matrix, as_vector
from .errors import InvalidParameter

__all__ = [
    "Seed",
    "LabelVector",
    "NoiseCov",
    "GmmParams",
    "SbmParams",
    "CsbmParams",
    "sample_gmm",
    "sample_sbm",
    "sample_csbm",
]


@dataclass(frozen=True)
class Seed:
    """Hierarchical RNG seed: a 64-bit master plus a derivation path.

    ``seed.child(i, j, ...)`` extends the path; distinct paths give
    statistically independent streams (counter-based Philox keyed by the
    spawn path), so parallel replicates never share or race on RNG state.
    """

    master: int
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master) < 2**64:
            raise InvalidParameter("master seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "master", int(self.master))
        object.__setattr__(self, "stream", tuple(int(s) for s in self.stream))

    def child(self, *path: int) -> "Seed":
        return Seed(self.master, self.stream + tuple(path))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master, spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(seq))

    def stream_str(self) -> str:
        return "/".join(str(s) for s in self.stream) if self.stream else "-"


@dataclass(frozen=True, eq=False)
class LabelVector:
    """Integer labels: ±1 in binary mode, 1..K in multiclass mode."""

    values: np.ndarray
    mode: str = "binary"
    k: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size == 0:
            raise InvalidParameter("labels must be a nonempty 1-D integer array")
        if self.mode == "binary":
            if not np.all(np.abs(v) == 1):
                raise InvalidParameter("binary labels must be +/-1")
            object.__setattr__(self, "k", 2)
        elif self.mode == "multiclass":
            k = int(self.k) if self.k is not None else int(v.max())
            if v.min() < 1 or v.max() > k:
                raise InvalidParameter(f"multiclass labels must lie in 1..{k}")
            object.__setattr__(self, "k", k)
        else:
            raise InvalidParameter(f"unknown label mode {self.mode!r}")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class NoiseCov:
    """Noise covariance: isotropic(var), diagonal(vector), or dense(matrix)."""

    kind: str
    var: float | None = None
    diag: np.ndarray | None = None
    matrix: np.ndarray | None = None

    @classmethod
    def isotropic(cls, var: float) -> "NoiseCov":
        if var < 0:
            raise InvalidParameter("variance must be nonnegative")
        return cls(kind="isotropic", var=float(var))

    @classmethod
    def diagonal(cls, diag) -> "NoiseCov":
        d = as_vector(diag, "diag")
        if np.any(d < 0):
            raise InvalidParameter("diagonal covariance entries must be nonnegative")
        return cls(kind="diagonal", diag=d)

    @classmethod
    def dense(cls, matrix) -> "NoiseCov":
        m = as_matrix(matrix, "sigma")
        if m.shape[0] != m.shape[1] or not np.allclose(m, m.T, atol=1e-12):
            raise InvalidParameter("dense covariance must be square symmetric")
        return cls(kind="dense", matrix=(m + m.T) / 2.0)

    def full_matrix(self, d: int) -> np.ndarray:
        """The covariance as an explicit d x d matrix."""
        if self.kind == "isotropic":
            return self.var * np.eye(d)
        if self.kind == "diagonal":
            if len(self.diag) != d:
                raise InvalidParameter(f"diagonal covariance has dim {len(self.diag)}, need {d}")
            return np.diag(self.diag)
        if self.matrix.shape[0] != d:
            raise InvalidParameter(f"dense covariance has dim {self.matrix.shape[0]}, need {d}")
        return self.matrix.copy()

    def _color(self, z: np.ndarray) -> np.ndarray:
        """Transform standard-normal rows z to rows with this covariance."""
        d = z.shape[1]
        if self.kind == "isotropic":
            return z * math.sqrt(self.var)
        if self.kind == "diagonal":
            if len(self.diag) != d:
                raise InvalidParameter(f"diagonal covariance has dim {len(self.diag)}, need {d}")
            return z * np.sqrt(self.diag)[None, :]
        if self.matrix.shape[0] != d:
            raise InvalidParameter(f"dense covariance has dim {self.matrix.shape[0]}, need {d}")
        try:
            chol = np.linalg.cholesky(self.matrix)
        except np.linalg.LinAlgError as exc:
            raise InvalidParameter("dense covariance is not positive definite") from exc
        return z @ chol.T


@dataclass(frozen=True, eq=False)
class GmmParams:
    """Gaussian mixture x_i = mu_{y_i} + z_i.

    ``centers`` is (K, d).  In binary mode the two centers are +mu and -mu
    and labels are ±1; multiclass labels are 1..K.  ``labels`` fixes the
    label vector; otherwise labels are drawn uniformly.  ``sample_scales``
    optionally multiplies sample i's noise by scale_i (covariance
    scale_i^2 * Sigma), which expresses heteroscedastic setups such as
    Sigma_1 = 2I with all other samples at I.
    """

    centers: np.ndarray
    noise_cov: NoiseCov = field(default_factory=lambda: NoiseCov.isotropic(1.0))
    labels: LabelVector | None = None
    mode: str = "multiclass"
    sample_scales: np.ndarray | None = None

    def __post_init__(self):
        c = as_matrix(self.centers, "centers")
        object.__setattr__(self, "centers", c)
        if self.mode not in ("binary", "multiclass"):
            raise InvalidParameter(f"unknown mixture mode {self.mode!r}")
        if self.mode == "binary" and c.shape[0] != 2:
            raise InvalidParameter("binary mode requires exactly the two centers +mu, -mu")
        if self.sample_scales is not None:
            s = as_vector(self.sample_scales, "sample_scales")
            if np.any(s < 0):
                raise InvalidParameter("sample_scales must be nonnegative")
            object.__setattr__(self, "sample_scales", s)

    @classmethod
    def binary(cls, mu, noise_cov: NoiseCov | None = None,
               labels: LabelVector | None = None,
               sample_scales=None) -> "GmmParams":
        """Two-component symmetric mixture x_i = y_i * mu + z_i with y_i = ±1."""
        mu = as_vector(mu, "mu")
        return cls(
            centers=np.vstack([mu, -mu]),
            noise_cov=noise_cov if noise_cov is not None else NoiseCov.isotropic(1.0),
            labels=labels,
            mode="binary",
            sample_scales=None if sample_scales is None else np.asarray(sample_scales, dtype=np.float64),
        )

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True, eq=False)
class SbmParams:
    """Two-block stochastic block model with within/between edge rates."""

    n: int
    alpha: float
    beta: float
    labels: LabelVector

    def __post_init__(self):
        if not (0 <= self.alpha <= 1 and 0 <= self.beta <= 1):
            raise InvalidParameter("edge probabilities must lie in [0, 1]")
        if len(self.labels) != self.n:
            raise InvalidParameter("labels length must equal n")


@dataclass(frozen=True)
class CsbmParams:
    """Contextual SBM: graph A ~ SBM(y, aq/n, bq/n) paired with attributes
    X ~ GMM(mu, y) where ||mu|| = R solves R^4/(R^2 + d/n) = cq."""

    n: int
    d: int
    a: float
    b: float
    c: float
    q: float

    def __post_init__(self):
        if self.n < 2 or self.d < 2:
            raise InvalidParameter("need n >= 2 and d >= 2")
        if not (self.a > 0 and self.b > 0 and self.c > 0 and self.q > 0):
            raise InvalidParameter("a, b, c, q must be positive")
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            raise InvalidParameter(
                f"derived edge probabilities alpha={self.alpha:.4g}, beta={self.beta:.4g} "
                "must lie in (0, 1)"
            )

    @property
    def alpha(self) -> float:
        return self.a * self.q / self.n

    @property
    def beta(self) -> float:
        return self.b * self.q / self.n

    @property
    def r_signal(self) -> float:
        """The attribute signal strength R > 0 solving R^4/(R^2 + d/n) = cq.

        Quadratic in R^2 with one positive root:
        R^2 = (cq + sqrt((cq)^2 + 4cq d/n)) / 2.
        """
        cq = self.c * self.q
        r2 = (cq + math.sqrt(cq * cq + 4.0 * cq * self.d / self.n)) / 2.0
        if not r2 > 0:
            raise InvalidParameter("no positive solution for the signal strength R")
        return math.sqrt(r2)


def _uniform_binary_labels(rng: np.random.Generator, n: int) -> LabelVector:
    return LabelVector(rng.integers(0, 2, size=n) * 2 - 1, mode="binary")


def sample_gmm(params: GmmParams, n: int, seed: Seed) -> tuple[np.ndarray, LabelVector]:
    """Draw n mixture samples x_i = mu_{y_i} + z_i.

    Labels come from ``params.labels`` when fixed, else uniformly from the
    classes (child stream 0); noise uses child stream 1.
    """
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    if params.labels is not None:
        if len(params.labels) != n:
            raise InvalidParameter(f"fixed labels have length {len(params.labels)}, need {n}")
        labels = params.labels
    else:
        label_rng = seed.child(0).generator()
        if params.mode == "binary":
            labels = _uniform_binary_labels(label_rng, n)
        else:
            labels = LabelVector(
                label_rng.integers(1, params.k + 1, size=n), mode="multiclass", k=params.k
            )
    if params.mode == "binary":
        rows = np.where(labels.values == 1, 0, 1)
    else:
        rows = labels.values - 1
    z = seed.child(1).generator().standard_normal((n, params.dim))
    z = params.noise_cov._color(z)
    if params.sample_scales is not None:
        if len(params.sample_scales) != n:
            raise InvalidParameter(f"sample_scales has length {len(params.sample_scales)}, need {n}")
        z = z * params.sample_scales[:, None]
    return params.centers[rows] + z, labels


def sample_sbm(params: SbmParams, seed: Seed) -> np.ndarray:
    """Draw the adjacency matrix: symmetric 0/1, zero diagonal, independent
    upper-triangle edges with rate alpha (same block) or beta (across)."""
    n = params.n
    y = params.labels.values
    same_block = np.equal.outer(y, y)
    prob = np.where(same_block, params.alpha, params.beta)
    u = seed.generator().random((n, n))
    iu = np.triu_indices(n, k=1)
    a = np.zeros((n, n))
    a[iu] = (u[iu] < prob[iu]).astype(np.float64)
    return a + a.T


def sample_csbm(
    params: CsbmParams,
    seed: Seed,
    y: LabelVector | None = None,
    mu: np.ndarray | None = None,
) -> tuple[LabelVector, np.ndarray, np.ndarray, np.ndarray]:
    """Draw one contextual-SBM realization (y, mu, A, X).

    y is uniform on {±1}^n (child stream 0), mu uniform on the radius-R
    sphere (child 1).  Given (y, mu), the graph A (child 2) and attribute
    noise (child 3) are independent.  Passing ``y`` or ``mu`` pins that
    component while leaving every other stream untouched, which is how the
    conditional-independence contract is exercised in tests.
    """
    if y is None:
        y = _uniform_binary_labels(seed.child(0).generator(), params.n)
    elif len(y) != params.n:
        raise InvalidParameter(f"injected y has length {len(y)}, need {params.n}")
    if mu is None:
        g = seed.child(1).generator().standard_normal(params.d)
        mu = params.r_signal * g / np.linalg.norm(g)
    else:
        mu = as_vector(mu, "mu")
        if len(mu) != params.d:
            raise InvalidParameter(f"injected mu has dim {len(mu)}, need {params.d}")
    a = sample_sbm(
        SbmParams(n=params.n, alpha=params.alpha, beta=params.beta, labels=y),
        seed.child(2),
    )
    z = seed.child(3).generator().standard_normal((params.n, params.d))
    x = y.values[:, None] * mu[None, :] + z
    return y, mu, a, x
