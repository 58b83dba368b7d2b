"""Clustering estimators built on the hollowed Gram matrix.

The embedding-plus-k-means pipeline, the binary sign estimator, the
leave-one-out (genie-aided) LDA comparator, leave-one-out Gram surgery,
and the two aggregated graph-plus-attributes estimators.  Scikit-learn
style wrappers live at the bottom.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from ._validation import as_matrix, as_symmetric, check_index
from .errors import (
    DegenerateSpectrum,
    EmptyClusterRepaired,
    InvalidParameter,
    NonpositiveEigenvalue,
)
from .kernels import KernelSpec, kernel_gram
from .linalg import (
    DESCENDING_BY_ABS,
    EigenDecomposition,
    eigh,
    gram,
    hollow,
    window_eigh,
)
from .models import LabelVector, Seed

__all__ = [
    "SpectralEmbedding",
    "KMeansResult",
    "CsbmEstimate",
    "hollowed_embedding",
    "kmeans_approx",
    "spectral_cluster",
    "sign_estimator",
    "oracle_lda",
    "oracle_lda_all",
    "leave_one_out_gram",
    "csbm_aggregated",
    "csbm_modified",
    "HollowedSpectralClustering",
    "HollowedEmbedding",
]


@dataclass(frozen=True, eq=False)
class SpectralEmbedding:
    """PC-score embedding: rows of U Lambda^{1/2} for an eigenvalue window."""

    scores: np.ndarray
    eigen: EigenDecomposition
    hollowed: bool


@dataclass(frozen=True, eq=False)
class KMeansResult:
    """Best-of-restarts k-means solution with 1..K labels."""

    centers: np.ndarray
    labels: LabelVector
    cost: float
    restarts_used: int


@dataclass(frozen=True, eq=False)
class CsbmEstimate:
    """Aggregated graph+attribute score u_hat and its sign labels.

    weights = (w_a, w_g): the scalar applied to the graph direction (u2(A),
    or A @ yhat_G / sqrt(n) for the modified variant) and to u1(G).
    lam1_a/lam2_a are the two leading-|.| eigenvalues of A (None for the
    modified variant, which never eigendecomposes A); lam1_g is the leading
    eigenvalue of the hollowed attribute Gram.
    """

    u_hat: np.ndarray
    labels: LabelVector
    weights: tuple[float, float]
    variant: str
    lam1_a: float | None
    lam2_a: float | None
    lam1_g: float


def _sign_with_convention(v: np.ndarray) -> np.ndarray:
    """Entrywise sign with sgn(0) := +1."""
    out = np.ones_like(v)
    out[v < 0] = -1.0
    return out


def hollowed_embedding(
    s, r: int, tol: float = 1e-10, allow_unhollowed: bool = False
) -> SpectralEmbedding:
    """Embed samples as rows of U Lambda^{1/2} from the top-r eigenpairs.

    ``s`` is expected to be hollowed (zero diagonal) — pass
    ``allow_unhollowed=True`` to embed a raw Gram or kernel matrix instead.
    All top-r eigenvalues must be positive for the square root to exist.
    """
    s = as_symmetric(s, "S")
    n = s.shape[0]
    if not 1 <= r <= n:
        raise InvalidParameter(f"r must lie in 1..{n}, got {r}")
    hollowed = bool(np.all(np.diag(s) == 0.0))
    if not hollowed and not allow_unhollowed:
        raise InvalidParameter(
            "matrix has a nonzero diagonal; hollow it first or pass allow_unhollowed=True"
        )
    dec = window_eigh(s, 0, r, tol=tol)
    if dec.values.min() <= 0:
        raise NonpositiveEigenvalue(
            f"eigenvalue {dec.values.min():.6g} in the top-{r} window is not positive"
        )
    scores = dec.vectors * np.sqrt(dec.values)
    return SpectralEmbedding(scores=scores, eigen=dec, hollowed=hollowed)


def _kmeans_pp_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)  # duplicate points: any choice is optimal
        centers[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))
    return centers


def _lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int):
    n, k = points.shape[0], centers.shape[0]
    labels = None
    for _ in range(max_iter):
        d2 = cdist(points, centers, metric="sqeuclidean")
        new_labels = d2.argmin(axis=1)
        for j in range(k):
            if not np.any(new_labels == j):
                # reseed the empty cluster at the point farthest from its center
                far = int(np.argmax(d2[np.arange(n), new_labels]))
                warnings.warn(
                    f"empty cluster {j} reseeded at point {far}", EmptyClusterRepaired
                )
                centers[j] = points[far]
                new_labels[far] = j
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            centers[j] = points[labels == j].mean(axis=0)
    d2 = cdist(points, centers, metric="sqeuclidean")
    labels = d2.argmin(axis=1)
    cost = float(d2[np.arange(n), labels].sum())
    return centers, labels, cost


def kmeans_approx(
    points,
    k: int,
    restarts: int = 10,
    max_iter: int = 100,
    seed: Seed | None = None,
) -> KMeansResult:
    """Best-of-restarts k-means (k-means++ seeding, Lloyd iterations).

    Each restart stops when the assignment reaches a fixed point; the
    lowest-cost restart wins, with ties going to the earlier restart.
    """
    points = as_matrix(points, "points")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise InvalidParameter(f"K must lie in 1..{n}, got {k}")
    if restarts < 1 or max_iter < 1:
        raise InvalidParameter("restarts and max_iter must be >= 1")
    seed = seed if seed is not None else Seed(0)
    best = None
    for restart in range(restarts):
        rng = seed.child(restart).generator()
        centers = _kmeans_pp_centers(points, k, rng)
        centers, labels, cost = _lloyd(points, centers.copy(), max_iter)
        if best is None or cost < best[2]:
            best = (centers, labels, cost)
    centers, labels, cost = best
    return KMeansResult(
        centers=centers,
        labels=LabelVector(labels + 1, mode="multiclass", k=k),
        cost=cost,
        restarts_used=restarts,
    )


def spectral_cluster(
    data,
    k: int,
    r: int | None = None,
    *,
    gram_input: bool = False,
    kernel: KernelSpec | None = None,
    hollow_gram: bool = True,
    restarts: int = 10,
    max_iter: int = 100,
    seed: Seed | None = None,
    tol: float = 1e-10,
) -> KMeansResult:
    """Full pipeline: (kernel) Gram -> hollow -> embed top-r -> k-means.

    ``data`` is a sample matrix, or a prebuilt symmetric matrix when
    ``gram_input=True`` (the kernel path).  r defaults to K and must not
    exceed it; ``hollow_gram=False`` skips the diagonal deletion for
    comparison runs.
    """
    if r is None:
        r = k
    if r > k:
        raise InvalidParameter(f"embedding rank r={r} must not exceed K={k}")
    if gram_input:
        s = as_symmetric(data, "S")
    else:
        x = as_matrix(data, "X")
        s = kernel_gram(x, kernel) if kernel is not None else gram(x)
    if hollow_gram:
        s = hollow(s)
    embedding = hollowed_embedding(s, r, tol=tol, allow_unhollowed=not hollow_gram)
    return kmeans_approx(embedding.scores, k, restarts=restarts, max_iter=max_iter, seed=seed)


def sign_estimator(s) -> LabelVector:
    """Binary labels: the entrywise sign of the leading eigenvector.

    Deterministic even in degenerate cases (zero entries map to +1).
    """
    s = as_symmetric(s, "S")
    dec = window_eigh(s, 0, 1)
    return LabelVector(
        _sign_with_convention(dec.vectors[:, 0]).astype(np.int64), mode="binary"
    )


def oracle_lda(x, y, i: int) -> int:
    """Genie-aided leave-one-out LDA sign for sample i.

    Classifies x_i by the sign of its inner product with the leave-one-out
    estimate mu_hat = (1/(n-1)) sum_{j != i} x_j y_j of the signal direction.
    """
    x = as_matrix(x, "X")
    yv = y.values if isinstance(y, LabelVector) else np.asarray(y, dtype=np.int64)
    n = x.shape[0]
    if n < 2:
        raise InvalidParameter("need at least two samples")
    check_index(i, n)
    mu_hat = (x.T @ yv - x[i] * yv[i]) / (n - 1)
    score = float(x[i] @ mu_hat)
    return 1 if score >= 0 else -1


def oracle_lda_all(x, y) -> np.ndarray:
    """All n leave-one-out LDA signs at once.

    Identical to [oracle_lda(x, y, i) for i in range(n)], using the identity
    (n-1) <x_i, mu_hat^(-i)> = <x_i, sum_j x_j y_j> - y_i ||x_i||^2.
    """
    x = as_matrix(x, "X")
    yv = y.values if isinstance(y, LabelVector) else np.asarray(y, dtype=np.int64)
    m = x.T @ yv
    scores = x @ m - yv * np.einsum("ij,ij->i", x, x)
    return _sign_with_convention(scores).astype(np.int64)


def leave_one_out_gram(g, m: int) -> np.ndarray:
    """Copy of G with row m and column m zeroed.

    When G = hollow(gram(X)) this equals hollow(gram(X with row m zeroed)),
    the decoupled matrix of the leave-one-out analysis.
    """
    g = as_symmetric(g, "G")
    check_index(m, g.shape[0])
    out = g.copy()
    out[m, :] = 0.0
    out[:, m] = 0.0
    return out


def _attribute_term(x) -> tuple[np.ndarray, float, float]:
    """u1(G), lambda1(G), and the weight 2*lam1^2/(n*lam1 + n*d) for the
    attribute half of the aggregated estimators."""
    x = as_matrix(x, "X")
    n, d = x.shape
    g = hollow(gram(x))
    dec = window_eigh(g, 0, 1)
    lam1_g = float(dec.values[0])
    denom = n * lam1_g + n * d
    if denom <= 1e-12:
        raise DegenerateSpectrum("attribute spectrum too weak: n*lam1(G) + n*d <= 0")
    w_g = 2.0 * lam1_g**2 / denom
    return dec.vectors[:, 0], lam1_g, w_g


def _check_adjacency(a) -> np.ndarray:
    a = as_symmetric(a, "A")
    if np.any(np.diag(a) != 0):
        raise InvalidParameter("adjacency matrix must have zero diagonal")
    return a


def csbm_aggregated(a, x) -> CsbmEstimate:
    """Aggregated spectral estimator combining graph and attributes.

    u_hat = log((lam1+lam2)/(lam1-lam2)) * lam2 * u2(A)
          + 2*lam1(G)^2/(n*lam1(G) + n*d) * u1(G),
    with A's eigenvalues ordered by absolute value and u2(A) flipped so
    <u2(A), u1(G)> >= 0.  Labels are sgn(u_hat).
    """
    a = _check_adjacency(a)
    n = a.shape[0]
    dec_a = eigh(a, ordering=DESCENDING_BY_ABS)
    lam1_a, lam2_a = float(dec_a.values[0]), float(dec_a.values[1])
    if lam1_a - lam2_a <= 1e-12:
        raise DegenerateSpectrum(
            f"graph eigengap lam1 - lam2 = {lam1_a - lam2_a:.3e} too small"
        )
    if lam1_a + lam2_a <= 0:
        raise DegenerateSpectrum(f"lam1 + lam2 = {lam1_a + lam2_a:.3e} <= 0")
    u2 = dec_a.vectors[:, 1]
    u1_g, lam1_g, w_g = _attribute_term(x)
    if float(u2 @ u1_g) < 0:
        u2 = -u2
    w_a = math.log((lam1_a + lam2_a) / (lam1_a - lam2_a)) * lam2_a
    u_hat = w_a * u2 + w_g * u1_g
    return CsbmEstimate(
        u_hat=u_hat,
        labels=LabelVector(_sign_with_convention(u_hat).astype(np.int64), mode="binary"),
        weights=(w_a, w_g),
        variant="aggregated",
        lam1_a=lam1_a,
        lam2_a=lam2_a,
        lam1_g=lam1_g,
    )


def csbm_modified(a, x) -> CsbmEstimate:
    """Eigenvector-free variant of the graph term, robust to sparse graphs.

    u_hat = (1/sqrt(n)) * log((1'A1 + yg'A yg)/(1'A1 - yg'A yg)) * A yg
          + 2*lam1(G)^2/(n*lam1(G) + n*d) * u1(G),
    where yg = sign_estimator(hollow(gram(x))).  A perfectly separated graph
    (zero denominator, positive numerator) saturates the log weight instead
    of erroring, which is the infinitely-informative-graph limit.
    """
    a = _check_adjacency(a)
    x = as_matrix(x, "X")
    n = a.shape[0]
    y_g = sign_estimator(hollow(gram(x))).values.astype(np.float64)
    ones = np.ones(n)
    s1 = float(ones @ a @ ones)
    s2 = float(y_g @ a @ y_g)
    num, den = s1 + s2, s1 - s2
    if num <= 0 or den < 0:
        raise DegenerateSpectrum(
            f"log argument ({num:.3g})/({den:.3g}) is not positive"
        )
    den = max(den, 1e-15 * num)  # saturate the perfectly-separated case
    w_a = math.log(num / den) / math.sqrt(n)
    u1_g, lam1_g, w_g = _attribute_term(x)
    u_hat = w_a * (a @ y_g) + w_g * u1_g
    return CsbmEstimate(
        u_hat=u_hat,
        labels=LabelVector(_sign_with_convention(u_hat).astype(np.int64), mode="binary"),
        weights=(w_a, w_g),
        variant="modified",
        lam1_a=None,
        lam2_a=None,
        lam1_g=lam1_g,
    )


class HollowedSpectralClustering(ClusterMixin, BaseEstimator):
    """Scikit-learn wrapper around :func:`spectral_cluster`.

    Transductive: call :meth:`fit` or :meth:`fit_predict` on the data to
    cluster; there is no out-of-sample ``predict``.  ``labels_`` follows the
    sklearn convention (0..K-1); the package-convention result (labels 1..K)
    is available as ``result_``.

    Parameters
    ----------
    n_clusters : int
        Number of clusters K.
    n_components : int or None
        Embedding rank r (defaults to K; must be <= K).
    hollow : bool
        Zero the Gram diagonal before embedding (the whole point; disable
        only for comparison runs).
    kernel : KernelSpec or None
        Optional kernel replacing the linear Gram matrix.
    restarts, max_iter : int
        K-means budget.
    random_state : int
        Master seed for the k-means restarts.
    """

    def __init__(
        self,
        n_clusters: int = 2,
        n_components: int | None = None,
        hollow: bool = True,
        kernel: KernelSpec | None = None,
        restarts: int = 10,
        max_iter: int = 100,
        random_state: int = 0,
    ):
        self.n_clusters = n_clusters
        self.n_components = n_components
        self.hollow = hollow
        self.kernel = kernel
        self.restarts = restarts
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        result = spectral_cluster(
            X,
            self.n_clusters,
            self.n_components,
            kernel=self.kernel,
            hollow_gram=self.hollow,
            restarts=self.restarts,
            max_iter=self.max_iter,
            seed=Seed(self.random_state),
        )
        self.result_ = result
        self.labels_ = result.labels.values - 1
        self.cluster_centers_ = result.centers
        self.inertia_ = result.cost
        return self


class HollowedEmbedding(BaseEstimator):
    """Scikit-learn wrapper around :func:`hollowed_embedding`.

    Transductive, like sklearn's SpectralEmbedding: ``fit_transform`` returns
    the PC scores of the fitted data and there is no ``transform`` for new
    samples.
    """

    def __init__(
        self,
        n_components: int = 2,
        hollow: bool = True,
        kernel: KernelSpec | None = None,
        tol: float = 1e-10,
    ):
        self.n_components = n_components
        self.hollow = hollow
        self.kernel = kernel
        self.tol = tol

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        s = kernel_gram(X, self.kernel) if self.kernel is not None else gram(X)
        if self.hollow:
            s = hollow(s)
        embedding = hollowed_embedding(
            s, self.n_components, tol=self.tol, allow_unhollowed=not self.hollow
        )
        self.embedding_ = embedding.scores
        self.eigenvalues_ = embedding.eigen.values
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_
