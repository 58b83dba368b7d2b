"""Evaluation metrics and theory diagnostics.

Misclassification with optimal label matching, signal-to-noise formulas for
mixtures, the exact-recovery information threshold and its rate function,
assumption diagnostics (eigengap, condition number, incoherence, gamma),
row-wise l_{2,p} linearization residuals, and the Markov outlier bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import pdist

from ._validation import as_matrix
from .errors import InvalidParameter, NonpositiveEigenvalue, ZeroEigengap
from .linalg import eigh, gram, hollow, matrix_sign, norm_2p, top_window
from .models import LabelVector

__all__ = [
    "Diagnostics",
    "ResidualReport",
    "misclassification",
    "snr_gmm",
    "snr_mixture",
    "istar",
    "rate_function",
    "diagnostics",
    "lp_residuals",
    "markov_outlier_count",
]

#: `which` tokens of the four residual reports, in emission order.
RESIDUAL_KINDS = (
    "u_vs_gram_ubar",
    "u_vs_linearization",
    "scores_vs_gram_ubar",
    "scores_vs_linearization",
)


@dataclass(frozen=True)
class Diagnostics:
    """Finite-sample surrogates for the spectral assumptions.

    delta_bar is the eigengap isolating the target window; kappa is the
    condition number lambda_1 / delta_bar; incoherence measures how evenly
    the signal rows spread their mass (1 = perfectly even); gamma is the
    smallest concentration parameter consistent with the noise covariance.
    gamma_kappa_mu = gamma * kappa * incoherence is the quantity that must
    be small for the linearization theory to bite; no pass/fail verdict is
    attached because the theory's "sufficiently small" has no finite-n
    cutoff.
    """

    delta_bar: float
    kappa: float
    incoherence: float
    gamma: float
    r: int
    s: int
    gamma_kappa_mu: float


@dataclass(frozen=True, eq=False)
class ResidualReport:
    """One measured l_{2,p} deviation and its natural scale.

    which: one of RESIDUAL_KINDS.  alignment is the r x r orthogonal matrix
    sgn(U^T Ubar) used to rotate the empirical basis onto the population one
    (a global ±1 when r = 1).
    """

    p: float
    lhs: float
    rhs_scale: float
    ratio: float
    which: str
    alignment: np.ndarray


def _label_values(y) -> np.ndarray:
    if isinstance(y, LabelVector):
        return y.values
    arr = np.asarray(y)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidParameter("labels must be a nonempty 1-D array")
    if not np.all(arr == np.round(arr)):
        raise InvalidParameter("labels must be integers")
    return arr.astype(np.int64)


def misclassification(yhat, y, k: int | None = None) -> float:
    """Fraction of mislabeled points under the best label matching.

    Binary ±1 labels are matched over the two global sign flips; multiclass
    labels 1..K over all permutations (exhaustively for K <= 8, by optimal
    assignment on the confusion matrix beyond).  Always a rate in [0, 1].
    """
    yh = _label_values(yhat)
    yt = _label_values(y)
    if len(yh) != len(yt):
        raise InvalidParameter(f"length mismatch: {len(yh)} vs {len(yt)}")
    n = len(yt)
    binary = np.all(np.abs(yh) == 1) and np.all(np.abs(yt) == 1)
    if binary and k in (None, 2):
        direct = int(np.sum(yh != yt))
        return min(direct, n - direct) / n
    if k is None:
        k = int(max(yh.max(), yt.max()))
    if yh.min() < 1 or yt.min() < 1 or yh.max() > k or yt.max() > k:
        raise InvalidParameter(f"multiclass labels must lie in 1..{k}")
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (yh - 1, yt - 1), 1)
    if k <= 8:
        best = max(
            sum(confusion[perm[j], j] for j in range(k))
            for perm in itertools.permutations(range(k))
        )
    else:
        rows, cols = linear_sum_assignment(-confusion)
        best = int(confusion[rows, cols].sum())
    return (n - best) / n


def snr_gmm(mu_norm: float, d: int, n: int) -> float:
    """Signal-to-noise ratio ||mu||^4 / (||mu||^2 + d/n) of the symmetric
    binary mixture with isotropic unit noise."""
    if mu_norm < 0:
        raise InvalidParameter("mu_norm must be nonnegative")
    m = float(mu_norm) ** 2
    return m * m / (m + d / n) if m > 0 else 0.0


def snr_mixture(centers, sigma, n: int) -> float:
    """General-mixture SNR: min{ s^2/||Sigma||_op, n s^4/||Sigma||_HS^2 }
    where s is the minimum pairwise center separation."""
    centers = as_matrix(centers, "centers")
    if centers.shape[0] < 2:
        raise InvalidParameter("need at least two centers")
    sigma = as_matrix(sigma, "sigma")
    op = float(np.linalg.eigvalsh((sigma + sigma.T) / 2.0).max())
    hs = float(np.linalg.norm(sigma))
    if hs == 0.0:
        raise InvalidParameter("sigma must be nonzero")
    sbar = float(pdist(centers).min())
    return min(sbar**2 / op, n * sbar**4 / hs**2)


def istar(a: float, b: float, c: float) -> float:
    """Exact-recovery information threshold ((sqrt(a) - sqrt(b))^2 + c) / 2;
    the phase transition sits at istar = 1."""
    if not (a > 0 and b > 0):
        raise InvalidParameter("a and b must be positive")
    if c < 0:
        raise InvalidParameter("c must be nonnegative")
    return ((math.sqrt(a) - math.sqrt(b)) ** 2 + c) / 2.0


def rate_function(t: float, a: float, b: float, c: float) -> float:
    """Large-deviation rate I(t) = (a/2)(1-(a/b)^t) + (b/2)(1-(b/a)^t) - 2c(t+t^2).

    Concave in t, zero at t = 0, and sup_t I(t) = I(-1/2) = istar(a, b, c).
    """
    if not (a > 0 and b > 0):
        raise InvalidParameter("a and b must be positive")
    ratio = a / b
    return (a / 2.0) * (1.0 - ratio**t) + (b / 2.0) * (1.0 - ratio**-t) - 2.0 * c * (t + t * t)


def diagnostics(xbar, s: int, r: int, sigma=None) -> Diagnostics:
    """Spectral-assumption diagnostics of a signal matrix at window (s, r).

    The window covers eigenvalues s+1 .. s+r (descending) of the population
    Gram xbar @ xbar.T; sigma is the noise covariance (None or 0 for the
    noiseless case).
    """
    xbar = as_matrix(xbar, "Xbar")
    n = xbar.shape[0]
    s = int(s)
    r = int(r)
    dec = eigh(gram(xbar))
    lam = dec.values
    if r < 1 or s < 0 or s + r > n:
        raise InvalidParameter(f"window (s={s}, r={r}) invalid for n={n}")
    gap_above = math.inf if s == 0 else lam[s - 1] - lam[s]
    gap_below = math.inf if s + r == n else lam[s + r - 1] - lam[s + r]
    delta_bar = min(gap_above, gap_below)
    if delta_bar <= 1e-12:
        raise ZeroEigengap(f"eigengap {delta_bar:.3e} at window (s={s}, r={r})")
    lam1 = lam[0]
    kappa = lam1 / delta_bar if math.isfinite(delta_bar) else 0.0
    spectral = math.sqrt(max(lam1, 0.0))
    if spectral <= 0:
        raise ZeroEigengap("signal matrix is zero")
    incoherence = max(norm_2p(xbar, math.inf) / spectral * math.sqrt(n / r), 1.0)
    if sigma is None:
        op = hs = 0.0
    else:
        sigma = as_matrix(sigma, "sigma")
        op = float(np.abs(np.linalg.eigvalsh((sigma + sigma.T) / 2.0)).max())
        hs = float(np.linalg.norm(sigma))
    gamma = max(
        kappa * incoherence * math.sqrt(r / n),
        math.sqrt(n) * math.sqrt(kappa * op / delta_bar) if op else 0.0,
        math.sqrt(n) * hs / delta_bar,
    )
    return Diagnostics(
        delta_bar=float(delta_bar),
        kappa=float(kappa),
        incoherence=float(incoherence),
        gamma=float(gamma),
        r=r,
        s=s,
        gamma_kappa_mu=float(gamma * kappa * incoherence),
    )


def lp_residuals(x, xbar, s: int, r: int, p: float) -> list[ResidualReport]:
    """The four l_{2,p} linearization residuals of the hollowed-Gram
    eigenvector window against its population counterpart.

    Computes G = hollow(x x^T), Gbar = xbar xbar^T, Z = x - xbar, takes the
    (s, r) eigenvector windows U (of G) and Ubar (of Gbar), aligns them with
    sgn(U^T Ubar), and reports, in RESIDUAL_KINDS order:

    1. || U sgn(H) - G Ubar inv(Lambdabar) ||_{2,p} / ||Ubar||_{2,p}
    2. the same with the one-step linearization Ubar + hollow(Z x^T) Ubar inv(Lambdabar)
    3-4. the PC-score versions, scaled by ||Ubar||_{2,p} ||Lambdabar^{1/2}||_2.
    """
    x = as_matrix(x, "X")
    xbar = as_matrix(xbar, "Xbar")
    if x.shape != xbar.shape:
        raise InvalidParameter(f"shape mismatch: {x.shape} vs {xbar.shape}")
    pf = float(p)
    if not (pf >= 2.0 or math.isinf(pf)):
        raise InvalidParameter(f"p must be >= 2 or math.inf, got {p}")

    g = hollow(gram(x))
    lam, u = top_window(eigh(g), s, r)
    lam_bar, u_bar = top_window(eigh(gram(xbar)), s, r)
    if lam_bar.min() <= 0:
        raise NonpositiveEigenvalue(
            f"population window eigenvalue {lam_bar.min():.3e} <= 0"
        )
    if lam.min() <= 0:
        raise NonpositiveEigenvalue(f"empirical window eigenvalue {lam.min():.3e} <= 0")

    sgn_h = matrix_sign(u.T @ u_bar)
    u_aligned = u @ sgn_h
    z = x - xbar
    hollowed_cross = hollow(z @ x.T)

    ubar_scale = norm_2p(u_bar, pf)
    g_ubar = g @ u_bar
    lin_u = u_bar + hollowed_cross @ (u_bar / lam_bar)

    sqrt_lam = np.sqrt(lam)
    sqrt_lam_bar = np.sqrt(lam_bar)
    scores_aligned = (u * sqrt_lam) @ sgn_h
    score_scale = ubar_scale * float(sqrt_lam_bar.max())

    pairs = [
        (u_aligned - g_ubar / lam_bar, ubar_scale),
        (u_aligned - lin_u, ubar_scale),
        (scores_aligned - g_ubar / sqrt_lam_bar, score_scale),
        (scores_aligned - (u_bar * sqrt_lam_bar + hollowed_cross @ (u_bar / sqrt_lam_bar)), score_scale),
    ]
    reports = []
    for which, (dev, scale) in zip(RESIDUAL_KINDS, pairs):
        lhs = norm_2p(dev, pf)
        reports.append(
            ResidualReport(
                p=pf, lhs=lhs, rhs_scale=scale, ratio=lhs / scale, which=which,
                alignment=sgn_h,
            )
        )
    return reports


def markov_outlier_count(resid, p: float, t: float) -> int:
    """Number of entries exceeding t in magnitude; always <= (||r||_p / t)^p."""
    if not p >= 1:
        raise InvalidParameter("p must be >= 1")
    if not t > 0:
        raise InvalidParameter("t must be positive")
    resid = np.asarray(resid, dtype=np.float64)
    return int(np.sum(np.abs(resid) > t))
