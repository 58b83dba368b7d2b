import json
import math

import numpy as np
import pytest

from hollowpca.errors import ConfigError, ConvergenceFailure, DegenerateSpectrum
from hollowpca.experiments import (
    EXPERIMENTS,
    SCHEMA_COMMENT,
    mu_norm_for_snr,
    resolve_config,
    run_experiment,
)
from hollowpca.experiments.config import ExperimentSpec, ParamField
from hollowpca.experiments.engine import EXPERIMENTS as ENGINE_REGISTRY
from hollowpca.metrics import istar, snr_gmm
from hollowpca.models import Seed


def make_raw(experiment="hollowing-demo", **overrides):
    raw = {
        "schema": 1,
        "experiment": experiment,
        "seed": 7,
        "replicates": 2,
        "params": {},
        "grid": {},
        "output": "out.csv",
    }
    raw.update(overrides)
    return raw


def strip_wall_time(text: str) -> str:
    """Drop the trailing wall-time cell of every data row."""
    lines = text.splitlines()
    kept = lines[:2] + [line.rsplit(",", 1)[0] for line in lines[2:]]
    return "\n".join(kept)


class TestMuNormForSnr:
    @pytest.mark.parametrize("snr,d,n", [(4.0, 2000, 2000), (10.0, 800, 400), (0.5, 10, 1000)])
    def test_inverts_snr(self, snr, d, n):
        mu = mu_norm_for_snr(snr, d, n)
        assert snr_gmm(mu, d, n) == pytest.approx(snr, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(Exception):
            mu_norm_for_snr(0.0, 10, 10)


class TestResolveConfig:
    def test_defaults_fill_in(self):
        config = resolve_config(make_raw(), EXPERIMENTS)
        assert config.base == {"n": 100, "d": 500, "mu_norm": 3.0, "scale": 2.0}
        assert config.grid == ()
        assert config.grid_size == 1
        assert config.output == "out.csv"

    def test_output_defaults_to_experiment_name(self):
        raw = make_raw()
        del raw["output"]
        config = resolve_config(raw, EXPERIMENTS)
        assert config.output == "hollowing-demo.csv"

    def test_output_gains_csv_suffix(self):
        config = resolve_config(make_raw(output="results"), EXPERIMENTS)
        assert config.output == "results.csv"

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError, match="unknown experiment"):
            resolve_config(make_raw(experiment="nope"), EXPERIMENTS)

    def test_unknown_parameter(self):
        with pytest.raises(ConfigError, match="unknown parameter 'dd'"):
            resolve_config(make_raw(params={"dd": 3}), EXPERIMENTS)

    def test_unknown_grid_axis(self):
        with pytest.raises(ConfigError, match="unknown grid axis"):
            resolve_config(make_raw(grid={"dd": [1, 2]}), EXPERIMENTS)

    def test_param_in_both_places(self):
        raw = make_raw(params={"d": 8}, grid={"d": [8, 16]})
        with pytest.raises(ConfigError, match="both params and grid"):
            resolve_config(raw, EXPERIMENTS)

    def test_bool_is_not_an_int(self):
        with pytest.raises(ConfigError, match="n must be an integer"):
            resolve_config(make_raw(params={"n": True}), EXPERIMENTS)

    def test_nonfinite_float_rejected(self):
        with pytest.raises(ConfigError, match="must be finite"):
            resolve_config(make_raw(params={"mu_norm": float("inf")}), EXPERIMENTS)

    def test_missing_required_parameter(self):
        raw = make_raw(experiment="gmm-rate", params={"n": 50})
        with pytest.raises(ConfigError, match="missing required parameter 'd'"):
            resolve_config(raw, EXPERIMENTS)

    def test_required_parameter_may_be_swept(self):
        raw = make_raw(experiment="gmm-rate", params={"n": 50, "d": 100}, grid={"snr": [2.0, 4.0]})
        config = resolve_config(raw, EXPERIMENTS)
        assert config.grid == (("snr", (2.0, 4.0)),)
        assert [p["snr"] for p in config.points()] == [2.0, 4.0]

    def test_replicates_must_be_positive(self):
        with pytest.raises(ConfigError, match="replicates must be >= 1"):
            resolve_config(make_raw(replicates=0), EXPERIMENTS)

    def test_seed_range(self):
        with pytest.raises(ConfigError, match="seed"):
            resolve_config(make_raw(seed=-1), EXPERIMENTS)
        with pytest.raises(ConfigError, match="seed"):
            resolve_config(make_raw(seed=2**64), EXPERIMENTS)

    def test_absolute_output_rejected(self):
        with pytest.raises(ConfigError, match="output must be relative"):
            resolve_config(make_raw(output="/tmp/x.csv"), EXPERIMENTS)

    def test_unknown_top_level_field(self):
        raw = make_raw()
        raw["worker_count"] = 4
        with pytest.raises(ConfigError, match="unknown top-level field"):
            resolve_config(raw, EXPERIMENTS)

    def test_empty_grid_axis(self):
        with pytest.raises(ConfigError, match="nonempty list"):
            resolve_config(make_raw(grid={"d": []}), EXPERIMENTS)

    def test_problems_accumulate(self):
        raw = make_raw(seed=-1, replicates=0, params={"nope": 1, "n": True})
        with pytest.raises(ConfigError) as exc_info:
            resolve_config(raw, EXPERIMENTS)
        assert len(exc_info.value.problems) >= 4

    def test_grid_point_invariants_checked(self):
        # a = 500 drives the within-block edge probability above one
        raw = make_raw(experiment="csbm-phase", params={"n": 50, "d": 20, "b": 1.0},
                       grid={"a": [2.0, 500.0]})
        with pytest.raises(ConfigError, match="grid point 1"):
            resolve_config(raw, EXPERIMENTS)

    def test_odd_n_rejected_by_experiment_check(self):
        with pytest.raises(ConfigError, match="n must be even"):
            resolve_config(make_raw(params={"n": 11}), EXPERIMENTS)

    def test_kernel_param_canonicalized(self):
        raw = make_raw(experiment="kmeans-mixture",
                       params={"n": 30, "d": 6, "snr": 50.0,
                               "kernel": {"kind": "gaussian", "eta": 0.5}})
        config = resolve_config(raw, EXPERIMENTS)
        assert config.base["kernel"] == {"kind": "gaussian", "eta": 0.5}

    def test_bad_kernel_kind_rejected(self):
        raw = make_raw(experiment="kmeans-mixture",
                       params={"n": 30, "d": 6, "snr": 50.0, "kernel": {"kind": "rbf"}})
        with pytest.raises(ConfigError, match="unknown kernel kind"):
            resolve_config(raw, EXPERIMENTS)

    def test_kernel_cannot_be_swept(self):
        raw = make_raw(experiment="kmeans-mixture",
                       params={"n": 30, "d": 6, "snr": 50.0},
                       grid={"kernel": [{"kind": "linear"}]})
        with pytest.raises(ConfigError, match="cannot be a grid axis"):
            resolve_config(raw, EXPERIMENTS)

    def test_choices_enforced(self):
        raw = make_raw(experiment="lp-approx", params={"n": 40, "p_mode": "weird"})
        with pytest.raises(ConfigError, match="p_mode must be one of"):
            resolve_config(raw, EXPERIMENTS)

    def test_resolved_config_roundtrips(self):
        raw = make_raw(params={"n": 16, "d": 12}, grid={"mu_norm": [1.0, 2.0]})
        config = resolve_config(raw, EXPERIMENTS)
        again = resolve_config(config.to_dict(), EXPERIMENTS)
        assert again.points() == config.points()
        assert again.seed == config.seed

    def test_grid_order_last_axis_fastest(self):
        raw = make_raw(experiment="gmm-rate", params={"d": 10},
                       grid={"n": [10, 20], "snr": [1.0, 2.0, 3.0]})
        config = resolve_config(raw, EXPERIMENTS)
        combos = [(p["n"], p["snr"]) for p in config.points()]
        assert combos == [(10, 1.0), (10, 2.0), (10, 3.0), (20, 1.0), (20, 2.0), (20, 3.0)]


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    raw = make_raw(params={"n": 16, "mu_norm": 4.0}, grid={"d": [8, 12]}, seed=99)
    config = resolve_config(raw, EXPERIMENTS)
    out = tmp_path_factory.mktemp("tiny")
    return run_experiment(config, workers=1, out_dir=out), out


class TestRunExperiment:

    def test_record_count_and_order(self, tiny_run):
        result, _ = tiny_run
        assert len(result.records) == 4  # 2 grid points x 2 replicates
        assert [(r.grid_index, r.replicate) for r in result.records] == [
            (0, 0), (0, 1), (1, 0), (1, 1)
        ]

    def test_seed_streams_reconstructible(self, tiny_run):
        result, _ = tiny_run
        for rec in result.records:
            assert rec.seed_stream == Seed(99).child(rec.grid_index, rec.replicate).stream_str()
        assert result.records[3].seed_stream == "1/1"

    def test_metrics_complete_and_finite(self, tiny_run):
        result, _ = tiny_run
        spec = EXPERIMENTS["hollowing-demo"]
        for rec in result.records:
            assert set(rec.metrics) == set(spec.metrics)
            assert all(math.isfinite(v) for v in rec.metrics.values())
            assert rec.status == "ok"

    def test_csv_layout(self, tiny_run):
        result, _ = tiny_run
        lines = result.csv_path.read_text().splitlines()
        assert lines[0] == SCHEMA_COMMENT
        assert lines[1] == (
            "experiment,n,d,mu_norm,scale,replicate,seed_stream,status,"
            "align_hollowed,align_unhollowed,err_hollowed,err_unhollowed,wall_time_s"
        )
        assert len(lines) == 2 + 4
        first = lines[2].split(",")
        assert first[0] == "hollowing-demo"
        assert first[1:5] == ["16", "8", "4.0", "2.0"]
        assert first[5:8] == ["0", "0/0", "ok"]

    def test_sidecar_holds_config_and_summary(self, tiny_run):
        result, _ = tiny_run
        payload = json.loads(result.sidecar_path.read_text())
        assert payload["config"] == result.config.to_dict()
        points = payload["summary"]["points"]
        assert [p["d"] for p in points] == [8, 12]
        assert all(0.0 <= p["median_align_hollowed"] <= 1.0 for p in points)

    def test_vectors_artifact(self, tiny_run):
        result, out = tiny_run
        assert result.extra_paths == (out / "out-vectors.csv",)
        lines = result.extra_paths[0].read_text().splitlines()
        assert lines[0] == SCHEMA_COMMENT
        assert lines[1] == "index,u_bar,u_hollowed,u_unhollowed"
        assert len(lines) == 2 + 16
        # the population vector column is the balanced +-1/sqrt(n) split
        u_bar = [float(line.split(",")[1]) for line in lines[2:]]
        assert u_bar == [1 / 4.0] * 8 + [-1 / 4.0] * 8

    def test_rerun_byte_identical_modulo_wall_time(self, tmp_path):
        raw = make_raw(params={"n": 12, "d": 6}, seed=5)
        config = resolve_config(raw, EXPERIMENTS)
        first = run_experiment(config, workers=1, out_dir=tmp_path / "a")
        second = run_experiment(config, workers=1, out_dir=tmp_path / "b")
        assert strip_wall_time(first.csv_path.read_text()) == strip_wall_time(
            second.csv_path.read_text()
        )
        assert first.sidecar_path.read_text() == second.sidecar_path.read_text()

    def test_parallel_matches_serial(self, tmp_path):
        raw = make_raw(params={"n": 12, "d": 6}, replicates=3, seed=5)
        config = resolve_config(raw, EXPERIMENTS)
        serial = run_experiment(config, workers=1, out_dir=tmp_path / "serial")
        parallel = run_experiment(config, workers=2, out_dir=tmp_path / "parallel")
        assert strip_wall_time(serial.csv_path.read_text()) == strip_wall_time(
            parallel.csv_path.read_text()
        )

    def test_nested_output_path(self, tmp_path):
        raw = make_raw(params={"n": 8, "d": 4}, replicates=1, output="sub/dir/r.csv")
        config = resolve_config(raw, EXPERIMENTS)
        result = run_experiment(config, workers=1, out_dir=tmp_path)
        assert result.csv_path == tmp_path / "sub" / "dir" / "r.csv"
        assert result.csv_path.exists()

    def test_csbm_istar_column(self, tmp_path):
        raw = make_raw(experiment="csbm-phase", seed=3, replicates=2,
                       params={"n": 60, "d": 30, "b": 1.0}, grid={"a": [6.0]})
        config = resolve_config(raw, EXPERIMENTS)
        result = run_experiment(config, workers=1, out_dir=tmp_path)
        for rec in result.records:
            if rec.status in ("ok", "degenerate") and math.isfinite(rec.metrics["istar"]):
                assert rec.metrics["istar"] == pytest.approx(istar(6.0, 1.0, 1.5))
        point = result.summary["points"][0]
        assert 0.0 <= point["frequency"] <= 1.0


def toy_spec(task, metrics=("value",), summarize=None):
    return ExperimentSpec(
        name="toy",
        summary="failure-policy fixture",
        fields=(ParamField("x", "int", default=1),),
        metrics=metrics,
        task=task,
        summarize=summarize,
    )


class TestFailurePolicy:
    def run_toy(self, monkeypatch, tmp_path, task, summarize=None):
        spec = toy_spec(task, summarize=summarize)
        monkeypatch.setitem(ENGINE_REGISTRY, "toy", spec)
        config = resolve_config(make_raw(experiment="toy", replicates=2), {"toy": spec})
        # toy specs exist only in this process, so keep execution in-process
        return run_experiment(config, workers=1, out_dir=tmp_path)

    def test_degenerate_becomes_status_row(self, monkeypatch, tmp_path):
        def task(params, seed):
            raise DegenerateSpectrum("no gap")

        result = self.run_toy(monkeypatch, tmp_path, task)
        assert [rec.status for rec in result.records] == ["degenerate", "degenerate"]
        assert all(math.isnan(rec.metrics["value"]) for rec in result.records)
        assert result.n_failures == 2
        data_row = result.csv_path.read_text().splitlines()[2]
        assert ",degenerate,nan," in data_row

    def test_convergence_becomes_status_row(self, monkeypatch, tmp_path):
        def task(params, seed):
            raise ConvergenceFailure("stalled")

        result = self.run_toy(monkeypatch, tmp_path, task)
        assert {rec.status for rec in result.records} == {"convergence"}

    def test_partial_status_keeps_metrics(self, monkeypatch, tmp_path):
        def task(params, seed):
            return {"value": 1.5, "_status": "partial"}

        result = self.run_toy(monkeypatch, tmp_path, task)
        assert all(rec.status == "partial" for rec in result.records)
        assert all(rec.metrics["value"] == 1.5 for rec in result.records)
        assert result.n_failures == 2

    def test_unexpected_exception_propagates(self, monkeypatch, tmp_path):
        def task(params, seed):
            raise ValueError("boom")

        with pytest.raises(ValueError, match="boom"):
            self.run_toy(monkeypatch, tmp_path, task)

    def test_missing_metric_recorded_as_nan(self, monkeypatch, tmp_path):
        def task(params, seed):
            return {}

        result = self.run_toy(monkeypatch, tmp_path, task)
        assert all(math.isnan(rec.metrics["value"]) for rec in result.records)
        assert result.n_failures == 0

    def test_nan_summary_serialized_as_null(self, monkeypatch, tmp_path):
        def task(params, seed):
            return {"value": 2.0}

        def summarize(config, records):
            return {"gap": math.nan, "count": len(records), "nested": [math.inf]}

        result = self.run_toy(monkeypatch, tmp_path, task, summarize=summarize)
        payload = json.loads(result.sidecar_path.read_text())
        assert payload["summary"] == {"gap": None, "count": 2, "nested": [None]}


class TestBuiltinRegistry:
    def test_six_experiments_registered(self):
        assert sorted(EXPERIMENTS) == [
            "csbm-modified-sparse",
            "csbm-phase",
            "gmm-rate",
            "hollowing-demo",
            "kmeans-mixture",
            "lp-approx",
        ]

    def test_metric_names_disjoint_from_columns(self):
        reserved = {"experiment", "replicate", "seed_stream", "status", "wall_time_s"}
        for spec in EXPERIMENTS.values():
            assert not (set(spec.metrics) & reserved)
            assert not (set(spec.field_names()) & reserved)
            assert not (set(spec.field_names()) & set(spec.metrics))

    def test_kmeans_mixture_task_hits_target_snr(self):
        # the resolved centers reproduce the requested mixture SNR exactly
        spec = EXPERIMENTS["kmeans-mixture"]
        out = spec.task(
            {"n": 40, "d": 12, "snr": 30.0, "geometry": "simplex", "r": 0,
             "noise_decay": 0.0, "restarts": 4, "kernel": None},
            Seed(1).child(0, 0),
        )
        assert min(out["snr_op"], out["snr_hs"]) == pytest.approx(30.0, rel=1e-9)

    def test_gmm_rate_summary_slope(self, tmp_path):
        raw = make_raw(experiment="gmm-rate", seed=11, replicates=30,
                       params={"n": 200, "d": 200}, grid={"snr": [4.0, 7.0]})
        config = resolve_config(raw, EXPERIMENTS)
        result = run_experiment(config, workers=1, out_dir=tmp_path)
        assert math.isfinite(result.summary["slope"])
        assert result.summary["slope"] < 0
