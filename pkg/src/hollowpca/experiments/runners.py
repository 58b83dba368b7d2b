"""The built-in experiments: per-replicate tasks, parameter declarations,
summaries, and extra artifacts.

Each experiment is an ExperimentSpec registered in EXPERIMENTS.  Tasks are
pure functions of (params, seed): all randomness flows through the Seed
passed in, with the data sampler drawing from ``seed.child(0)`` and any
randomized algorithm (k-means restarts) from ``seed.child(1)``, so records
are reproducible from the master seed and the (grid index, replicate) pair
alone.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ..errors import DegenerateSpectrum, InvalidParameter
from ..estimators import csbm_aggregated, csbm_modified, oracle_lda_all, spectral_cluster
from ..kernels import KernelSpec
from ..linalg import gram, hollow, window_eigh
from ..metrics import istar, lp_residuals, misclassification
from ..models import CsbmParams, GmmParams, LabelVector, NoiseCov, Seed, sample_csbm, sample_gmm
from .config import ExperimentConfig, ExperimentSpec, ParamField

__all__ = ["EXPERIMENTS", "mu_norm_for_snr"]


def mu_norm_for_snr(snr: float, d: int, n: int) -> float:
    """The ||mu|| whose symmetric binary-mixture SNR equals ``snr``.

    Inverts snr_gmm: with m = ||mu||^2, the SNR is m^2/(m + d/n), so m is
    the positive root of m^2 - snr*m - snr*d/n.
    """
    if not snr > 0:
        raise InvalidParameter(f"snr must be positive, got {snr}")
    m = (snr + math.sqrt(snr * snr + 4.0 * snr * d / n)) / 2.0
    return math.sqrt(m)


def _binary_signs(u: np.ndarray) -> LabelVector:
    return LabelVector(np.where(u >= 0, 1, -1).astype(np.int64), mode="binary")


def _grouped(config: ExperimentConfig, records):
    """Records bucketed by grid point: (index, params, [records])."""
    points = config.points()
    buckets: list[list] = [[] for _ in points]
    for rec in records:
        buckets[rec.grid_index].append(rec)
    return [(i, points[i], bucket) for i, bucket in enumerate(buckets)]


def _ok_values(bucket, metric: str) -> list[float]:
    out = []
    for rec in bucket:
        value = rec.metrics.get(metric, math.nan)
        if rec.status == "ok" and value == value:
            out.append(value)
    return out


def _median(values) -> float:
    return float(np.median(values)) if len(values) else math.nan


def _mean(values) -> float:
    return float(np.mean(values)) if len(values) else math.nan


# ---------------------------------------------------------------------------
# hollowing-demo


def _hollowing_vectors(params: dict, seed: Seed):
    """One heteroscedastic-mixture draw and its three leading eigenvectors
    (population, hollowed, unhollowed)."""
    n, d = params["n"], params["d"]
    half = n // 2
    labels = LabelVector(
        np.concatenate([np.ones(half), -np.ones(half)]).astype(np.int64), mode="binary"
    )
    mu = np.zeros(d)
    mu[0] = params["mu_norm"]
    scales = np.ones(n)
    scales[0] = math.sqrt(params["scale"])
    model = GmmParams.binary(mu, labels=labels, sample_scales=scales)
    x, _ = sample_gmm(model, n, seed.child(0))
    raw = gram(x)
    u_unhollowed = window_eigh(raw, 0, 1).vectors[:, 0]
    u_hollowed = window_eigh(hollow(raw), 0, 1).vectors[:, 0]
    u_bar = labels.values / math.sqrt(n)
    return labels, u_bar, u_hollowed, u_unhollowed


def _hollowing_demo_task(params: dict, seed: Seed) -> dict:
    labels, u_bar, u_hollowed, u_unhollowed = _hollowing_vectors(params, seed)
    return {
        "align_hollowed": abs(float(u_hollowed @ u_bar)),
        "align_unhollowed": abs(float(u_unhollowed @ u_bar)),
        "err_hollowed": misclassification(_binary_signs(u_hollowed), labels),
        "err_unhollowed": misclassification(_binary_signs(u_unhollowed), labels),
    }


def _hollowing_demo_check(params) -> None:
    if params["n"] % 2:
        raise InvalidParameter("n must be even (labels are the fixed balanced split)")


def _hollowing_demo_summary(config: ExperimentConfig, records) -> dict:
    points = []
    for _, params, bucket in _grouped(config, records):
        entry = {"n": params["n"], "d": params["d"], "mu_norm": params["mu_norm"]}
        for metric in _HOLLOWING_METRICS:
            entry[f"median_{metric}"] = _median(_ok_values(bucket, metric))
        points.append(entry)
    return {"points": points}


def _hollowing_demo_finalize(config: ExperimentConfig, records, out_dir: Path) -> list[Path]:
    """Dump the three eigenvectors of grid point 0, replicate 0, entrywise."""
    seed = Seed(config.seed).child(0, 0)
    _, u_bar, u_hollowed, u_unhollowed = _hollowing_vectors(config.point(0), seed)
    stem = Path(config.output).name[: -len(".csv")]
    path = out_dir / (stem + "-vectors.csv")
    lines = ["# hollowpca csv schema v1", "index,u_bar,u_hollowed,u_unhollowed"]
    for i in range(len(u_bar)):
        lines.append(
            f"{i},{float(u_bar[i])!r},{float(u_hollowed[i])!r},{float(u_unhollowed[i])!r}"
        )
    path.write_text("\n".join(lines) + "\n")
    return [path]


_HOLLOWING_METRICS = ("align_hollowed", "align_unhollowed", "err_hollowed", "err_unhollowed")

_HOLLOWING_DEMO = ExperimentSpec(
    name="hollowing-demo",
    summary="diagonal deletion vs raw Gram under one doubled-noise sample",
    fields=(
        ParamField("n", "int", default=100, minimum=4),
        ParamField("d", "int", default=500, minimum=1),
        ParamField("mu_norm", "float", default=3.0, minimum=0.0, exclusive=True),
        ParamField("scale", "float", default=2.0, minimum=0.0,
                   help="noise variance factor of sample 1"),
    ),
    metrics=_HOLLOWING_METRICS,
    task=_hollowing_demo_task,
    check=_hollowing_demo_check,
    summarize=_hollowing_demo_summary,
    finalize=_hollowing_demo_finalize,
)


# ---------------------------------------------------------------------------
# csbm-phase and csbm-modified-sparse


def _csbm_model(params: dict) -> CsbmParams:
    q = math.log(params["n"]) ** params["q_power"]
    return CsbmParams(
        n=params["n"], d=params["d"], a=params["a"], b=params["b"], c=params["c"], q=q
    )


def _csbm_check(params) -> None:
    _csbm_model(params)  # CsbmParams validates the derived edge probabilities


def _csbm_phase_task(params: dict, seed: Seed) -> dict:
    model = _csbm_model(params)
    y, _, adjacency, x = sample_csbm(model, seed.child(0))
    out = {"istar": istar(params["a"], params["b"], params["c"]), "q": model.q}
    try:
        estimate = csbm_aggregated(adjacency, x)
    except DegenerateSpectrum:
        out["_status"] = "degenerate"
        return out
    error = misclassification(estimate.labels, y)
    out["error"] = error
    out["exact"] = 1.0 if error == 0.0 else 0.0
    return out


def _csbm_frequency_points(config, records, error_key, exact_key):
    points = []
    for _, params, bucket in _grouped(config, records):
        exact = _ok_or_partial_values(bucket, exact_key)
        points.append(
            {
                "a": params["a"],
                "b": params["b"],
                "q_power": params["q_power"],
                "istar": istar(params["a"], params["b"], params["c"]),
                "frequency": float(sum(exact)) / max(len(bucket), 1),
                "mean_error": _mean(_ok_or_partial_values(bucket, error_key)),
                "failed": sum(1 for rec in bucket if rec.status != "ok"),
            }
        )
    return points


def _ok_or_partial_values(bucket, metric: str) -> list[float]:
    out = []
    for rec in bucket:
        value = rec.metrics.get(metric, math.nan)
        if rec.status in ("ok", "partial") and value == value:
            out.append(value)
    return out


def _csbm_phase_summary(config: ExperimentConfig, records) -> dict:
    return {"points": _csbm_frequency_points(config, records, "error", "exact")}


_CSBM_FIELDS = (
    ParamField("n", "int", default=500, minimum=2),
    ParamField("d", "int", default=2000, minimum=2),
    ParamField("a", "float", minimum=0.0, exclusive=True),
    ParamField("b", "float", minimum=0.0, exclusive=True),
    ParamField("c", "float", default=1.5, minimum=0.0, exclusive=True),
    ParamField("q_power", "float", default=1.0,
               help="graph density exponent: q = log(n) ** q_power"),
)

_CSBM_PHASE = ExperimentSpec(
    name="csbm-phase",
    summary="exact-recovery frequency of the aggregated graph+attribute estimator over an (a, b) grid",
    fields=_CSBM_FIELDS,
    metrics=("istar", "q", "error", "exact"),
    task=_csbm_phase_task,
    check=_csbm_check,
    summarize=_csbm_phase_summary,
)


def _csbm_modified_sparse_task(params: dict, seed: Seed) -> dict:
    model = _csbm_model(params)
    y, _, adjacency, x = sample_csbm(model, seed.child(0))
    out = {"istar": istar(params["a"], params["b"], params["c"]), "q": model.q}
    try:
        modified = csbm_modified(adjacency, x)
    except DegenerateSpectrum:
        out["_status"] = "degenerate"
    else:
        error = misclassification(modified.labels, y)
        out["err_modified"] = error
        out["exact_modified"] = 1.0 if error == 0.0 else 0.0
    try:
        aggregated = csbm_aggregated(adjacency, x)
    except DegenerateSpectrum:
        out.setdefault("_status", "partial")
    else:
        error = misclassification(aggregated.labels, y)
        out["err_aggregated"] = error
        out["exact_aggregated"] = 1.0 if error == 0.0 else 0.0
    return out


def _csbm_modified_sparse_summary(config: ExperimentConfig, records) -> dict:
    points = _csbm_frequency_points(config, records, "err_modified", "exact_modified")
    for point, (_, _, bucket) in zip(points, _grouped(config, records)):
        mean_aggregated = _mean(_ok_or_partial_values(bucket, "err_aggregated"))
        point["mean_error_aggregated"] = mean_aggregated
        mean_modified = point["mean_error"]
        if mean_modified == mean_modified and mean_modified > 0 and mean_aggregated == mean_aggregated:
            point["aggregated_over_modified"] = mean_aggregated / mean_modified
        else:
            point["aggregated_over_modified"] = math.nan
    return {"points": points}


_CSBM_MODIFIED_SPARSE = ExperimentSpec(
    name="csbm-modified-sparse",
    summary="modified vs aggregated estimator on sparse graphs, q = log(n)**q_power",
    fields=_CSBM_FIELDS,
    metrics=("istar", "q", "err_modified", "exact_modified", "err_aggregated", "exact_aggregated"),
    task=_csbm_modified_sparse_task,
    check=_csbm_check,
    summarize=_csbm_modified_sparse_summary,
)


# ---------------------------------------------------------------------------
# gmm-rate


def _gmm_rate_task(params: dict, seed: Seed) -> dict:
    n, d = params["n"], params["d"]
    mu_norm = mu_norm_for_snr(params["snr"], d, n)
    mu = np.zeros(d)
    mu[0] = mu_norm
    x, y = sample_gmm(GmmParams.binary(mu), n, seed.child(0))
    u = window_eigh(hollow(gram(x)), 0, 1).vectors[:, 0]
    error = misclassification(_binary_signs(u), y)
    return {"mu_norm": mu_norm, "error": error, "exact": 1.0 if error == 0.0 else 0.0}


def _gmm_rate_summary(config: ExperimentConfig, records) -> dict:
    points = []
    regime = []
    for _, params, bucket in _grouped(config, records):
        mean_error = _mean(_ok_values(bucket, "error"))
        exact = _ok_values(bucket, "exact")
        points.append(
            {
                "n": params["n"],
                "snr": params["snr"],
                "mean_error": mean_error,
                "frequency": float(sum(exact)) / max(len(bucket), 1),
            }
        )
        if 1.0 <= params["snr"] <= 2.0 * math.log(params["n"]) and mean_error > 0:
            regime.append((params["snr"], math.log(mean_error)))
    slope = math.nan
    if len(regime) >= 2:
        snrs, logs = zip(*regime)
        slope = float(np.polyfit(snrs, logs, 1)[0])
    return {"points": points, "slope": slope}


_GMM_RATE = ExperimentSpec(
    name="gmm-rate",
    summary="misclassification of the leading-eigenvector sign over an SNR sweep",
    fields=(
        ParamField("n", "int", minimum=2),
        ParamField("d", "int", minimum=1),
        ParamField("snr", "float", minimum=0.0, exclusive=True),
    ),
    metrics=("mu_norm", "error", "exact"),
    task=_gmm_rate_task,
    summarize=_gmm_rate_summary,
)


# ---------------------------------------------------------------------------
# lp-approx


def _lp_resolve_p(params: dict) -> float:
    mode = params["p_mode"]
    if mode == "snr":
        return float(params["snr"])
    if mode == "log":
        return params["p_value"] * math.log(params["n"])
    return float(params["p_value"])


def _lp_approx_check(params) -> None:
    p = _lp_resolve_p(params)
    if not p >= 2.0:
        raise InvalidParameter(f"resolved p = {p:.4g} must be >= 2")
    if round(params["d_ratio"] * params["n"]) < 1:
        raise InvalidParameter("d_ratio * n must round to at least 1")


def _lp_approx_task(params: dict, seed: Seed) -> dict:
    n = params["n"]
    d = int(round(params["d_ratio"] * n))
    p = _lp_resolve_p(params)
    mu_norm = mu_norm_for_snr(params["snr"], d, n)
    mu = np.zeros(d)
    mu[0] = mu_norm
    x, y = sample_gmm(GmmParams.binary(mu), n, seed.child(0))
    xbar = np.outer(y.values, mu)
    reports = lp_residuals(x, xbar, 0, 1, p)

    u = window_eigh(hollow(gram(x)), 0, 1).vectors[:, 0]
    signs = np.where(u >= 0, 1, -1).astype(np.int64)
    oracle = oracle_lda_all(x, y)
    agreement = max(float(np.mean(signs == oracle)), float(np.mean(-signs == oracle)))

    out = {
        "p": p,
        "mu_norm": mu_norm,
        "oracle_agreement": agreement,
        "error": misclassification(LabelVector(signs, mode="binary"), y),
        "alignment_sign": float(reports[0].alignment[0, 0]),
    }
    for report in reports:
        out[report.which] = report.ratio
    return out


def _lp_approx_summary(config: ExperimentConfig, records) -> dict:
    points = []
    for _, params, bucket in _grouped(config, records):
        entry = {"n": params["n"], "snr": params["snr"], "p_mode": params["p_mode"]}
        for report_kind in _LP_RATIOS:
            entry[f"median_{report_kind}"] = _median(_ok_values(bucket, report_kind))
        entry["mean_oracle_agreement"] = _mean(_ok_values(bucket, "oracle_agreement"))
        entry["median_error"] = _median(_ok_values(bucket, "error"))
        points.append(entry)
    return {"points": points}


_LP_RATIOS = (
    "u_vs_gram_ubar",
    "u_vs_linearization",
    "scores_vs_gram_ubar",
    "scores_vs_linearization",
)

_LP_APPROX = ExperimentSpec(
    name="lp-approx",
    summary="row-norm residuals of the eigenvector linearization, plus genie-aided agreement",
    fields=(
        ParamField("n", "int", minimum=2),
        ParamField("d_ratio", "float", default=2.0, minimum=0.0, exclusive=True,
                   help="ambient dimension as a multiple of n"),
        ParamField("snr", "float", default=10.0, minimum=0.0, exclusive=True),
        ParamField("p_mode", "str", default="snr", choices=("snr", "log", "fixed")),
        ParamField("p_value", "float", default=1.0, minimum=0.0, exclusive=True,
                   help="coefficient for p_mode=log, the exponent itself for p_mode=fixed"),
    ),
    metrics=("p", "mu_norm", *_LP_RATIOS, "oracle_agreement", "error", "alignment_sign"),
    task=_lp_approx_task,
    check=_lp_approx_check,
    summarize=_lp_approx_summary,
)


# ---------------------------------------------------------------------------
# kmeans-mixture

_GEOMETRY_GRAMS = {
    "binary": np.array([[1.0, -1.0], [-1.0, 1.0]]),
    "orthogonal": np.eye(3),
    "simplex": 1.5 * np.eye(3) - 0.5 * np.ones((3, 3)),
}


def _geometry_factor(geometry: str) -> np.ndarray:
    """Rows are unit-scale centers whose Gram matrix is the named geometry."""
    b = _GEOMETRY_GRAMS[geometry]
    w, v = np.linalg.eigh(b)
    keep = w > 1e-9
    return v[:, keep] * np.sqrt(w[keep])


def _kmeans_mixture_setup(params: dict):
    """Centers, noise model, and embedding rank hitting the target SNR.

    The centers are a scaled square-root factor of the geometry's Gram
    matrix embedded in the first coordinates; the scale solves
    min(sep^2/||Sigma||_op, n sep^4/||Sigma||_HS^2) = snr for the minimum
    pairwise separation sep.
    """
    n, d, decay = params["n"], params["d"], params["noise_decay"]
    factor = _geometry_factor(params["geometry"])
    k, rank = factor.shape
    diag = np.arange(1, d + 1, dtype=np.float64) ** (-decay)
    op = 1.0
    hs = math.sqrt(float(np.sum(diag**2)))
    snr = params["snr"]
    sep_sq = max(snr * op, math.sqrt(snr / n) * hs)
    base_sep = float(np.min(
        np.linalg.norm(factor[:, None, :] - factor[None, :, :], axis=2)[np.triu_indices(k, 1)]
    ))
    scale = math.sqrt(sep_sq) / base_sep
    centers = np.zeros((k, d))
    centers[:, :rank] = scale * factor
    noise = NoiseCov.isotropic(1.0) if decay == 0 else NoiseCov.diagonal(diag)
    r = params["r"] if params["r"] else rank
    return centers, noise, k, r, scale, sep_sq, op, hs


def _kmeans_mixture_check(params) -> None:
    factor = _geometry_factor(params["geometry"])
    k, rank = factor.shape
    if params["n"] < k:
        raise InvalidParameter(f"need n >= {k} samples for {k} clusters")
    if params["d"] < rank:
        raise InvalidParameter(f"geometry {params['geometry']} needs d >= {rank}")
    if params["r"] and not 1 <= params["r"] <= k:
        raise InvalidParameter(f"r must lie in 1..{k} (or 0 for the geometry rank)")


def _kmeans_mixture_task(params: dict, seed: Seed) -> dict:
    centers, noise, k, r, scale, sep_sq, op, hs = _kmeans_mixture_setup(params)
    model = GmmParams(centers=centers, noise_cov=noise, mode="multiclass")
    x, y = sample_gmm(model, params["n"], seed.child(0))
    kernel = KernelSpec.from_dict(params["kernel"]) if params["kernel"] else None
    result = spectral_cluster(
        x, k, r, kernel=kernel, restarts=params["restarts"], seed=seed.child(1)
    )
    error = misclassification(result.labels, y, k=k)
    n = params["n"]
    return {
        "error": error,
        "exact": 1.0 if error == 0.0 else 0.0,
        "cost": result.cost,
        "scale": scale,
        "r_used": float(r),
        "snr_op": sep_sq / op,
        "snr_hs": n * sep_sq * sep_sq / (hs * hs),
    }


def _kmeans_mixture_summary(config: ExperimentConfig, records) -> dict:
    points = []
    for _, params, bucket in _grouped(config, records):
        exact = _ok_values(bucket, "exact")
        points.append(
            {
                "geometry": params["geometry"],
                "snr": params["snr"],
                "r": params["r"],
                "mean_error": _mean(_ok_values(bucket, "error")),
                "frequency": float(sum(exact)) / max(len(bucket), 1),
            }
        )
    return {"points": points}


_KMEANS_MIXTURE = ExperimentSpec(
    name="kmeans-mixture",
    summary="spectral clustering error for the orthogonal/simplex/binary center geometries",
    fields=(
        ParamField("n", "int", minimum=2),
        ParamField("d", "int", minimum=1),
        ParamField("snr", "float", minimum=0.0, exclusive=True),
        ParamField("geometry", "str", default="orthogonal",
                   choices=tuple(sorted(_GEOMETRY_GRAMS))),
        ParamField("r", "int", default=0, minimum=0,
                   help="embedding rank; 0 uses the rank of the geometry Gram"),
        ParamField("noise_decay", "float", default=0.0, minimum=0.0,
                   help="noise spectrum diag(j**-decay): 0 is isotropic"),
        ParamField("restarts", "int", default=10, minimum=1),
        ParamField("kernel", "kernel", default=None, grid=False),
    ),
    metrics=("error", "exact", "cost", "scale", "r_used", "snr_op", "snr_hs"),
    task=_kmeans_mixture_task,
    check=_kmeans_mixture_check,
    summarize=_kmeans_mixture_summary,
)


EXPERIMENTS = {
    spec.name: spec
    for spec in (
        _HOLLOWING_DEMO,
        _CSBM_PHASE,
        _CSBM_MODIFIED_SPARSE,
        _GMM_RATE,
        _LP_APPROX,
        _KMEANS_MIXTURE,
    )
}
