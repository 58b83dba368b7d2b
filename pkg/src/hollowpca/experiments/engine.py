"""Grid execution and result serialization for the experiment harness.

The harness owns all parallelism: replicate tasks are pure functions keyed
by (master seed, grid index, replicate index), run either in-process or on
a spawned process pool, and every task pins its BLAS to one thread.  The
record stream is therefore identical — byte for byte, wall-time column
aside — no matter how many workers execute it or in which order.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from multiprocessing import get_context
from pathlib import Path
from typing import Any, Mapping

import numpy as np
from threadpoolctl import threadpool_limits

from ..errors import ConvergenceFailure, DegenerateSpectrum
from ..models import Seed
from .config import ExperimentConfig
from .runners import EXPERIMENTS

__all__ = ["ReplicateRecord", "RunResult", "run_experiment", "SCHEMA_COMMENT"]

SCHEMA_COMMENT = "# hollowpca csv schema v1"

STATUS_OK = "ok"
STATUS_DEGENERATE = "degenerate"
STATUS_CONVERGENCE = "convergence"
STATUS_PARTIAL = "partial"


@dataclass(frozen=True, eq=False)
class ReplicateRecord:
    """One (grid point, replicate) outcome."""

    grid_index: int
    replicate: int
    params: Mapping[str, Any]
    seed_stream: str
    status: str
    metrics: Mapping[str, float]
    wall_time_s: float


@dataclass(frozen=True, eq=False)
class RunResult:
    """Everything a finished run produced, in memory and on disk."""

    config: ExperimentConfig
    records: tuple[ReplicateRecord, ...]
    summary: dict
    csv_path: Path
    sidecar_path: Path
    extra_paths: tuple[Path, ...] = ()

    @property
    def n_failures(self) -> int:
        return sum(1 for rec in self.records if rec.status != STATUS_OK)


def _execute_task(payload):
    """Run one replicate; importable at module level so spawn can pickle it."""
    experiment, params, master, grid_index, replicate = payload
    spec = EXPERIMENTS[experiment]
    start = time.perf_counter()
    status = STATUS_OK
    metrics: dict[str, Any] = {}
    try:
        with threadpool_limits(limits=1):
            metrics = dict(spec.task(dict(params), Seed(master).child(grid_index, replicate)))
        status = metrics.pop("_status", STATUS_OK)
    except DegenerateSpectrum:
        status = STATUS_DEGENERATE
    except ConvergenceFailure:
        status = STATUS_CONVERGENCE
    wall = time.perf_counter() - start
    filled = {name: float(metrics.get(name, math.nan)) for name in spec.metrics}
    return grid_index, replicate, status, filled, wall


def _single_threaded_blas_env() -> None:
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, "1")


def run_experiment(config: ExperimentConfig, *, workers: int | None = 1, out_dir=".") -> RunResult:
    """Execute every (grid point, replicate) task and write the result files.

    Writes ``<out_dir>/<output>.csv`` (one row per record, sorted by grid
    index then replicate), a ``.json`` sidecar holding the resolved config
    and the experiment's summary, and any extra artifacts the experiment
    defines.  ``workers=None`` uses the machine's core count; any value
    above 1 runs tasks on a spawned process pool.
    """
    spec = EXPERIMENTS[config.experiment]
    points = config.points()
    payloads = [
        (config.experiment, points[gi], config.seed, gi, rep)
        for gi in range(len(points))
        for rep in range(config.replicates)
    ]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and len(payloads) > 1:
        _single_threaded_blas_env()
        with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("spawn")) as pool:
            raw = list(pool.map(_execute_task, payloads, chunksize=1))
    else:
        raw = [_execute_task(payload) for payload in payloads]
    raw.sort(key=lambda item: (item[0], item[1]))

    master = Seed(config.seed)
    records = tuple(
        ReplicateRecord(
            grid_index=gi,
            replicate=rep,
            params=points[gi],
            seed_stream=master.child(gi, rep).stream_str(),
            status=status,
            metrics=filled,
            wall_time_s=wall,
        )
        for gi, rep, status, filled, wall in raw
    )
    summary = spec.summarize(config, list(records)) if spec.summarize else {}

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / config.output
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    _write_records_csv(csv_path, config, spec, records)
    sidecar_path = csv_path.with_suffix(".json")
    sidecar_path.write_text(
        json.dumps({"config": config.to_dict(), "summary": _jsonify(summary)}, indent=2) + "\n"
    )
    extra = tuple(spec.finalize(config, list(records), csv_path.parent)) if spec.finalize else ()
    return RunResult(
        config=config,
        records=records,
        summary=summary,
        csv_path=csv_path,
        sidecar_path=sidecar_path,
        extra_paths=extra,
    )


def _format_cell(value) -> str:
    """Stable text form: shortest round-trip repr for floats, canonical JSON
    for kernel objects, empty for null."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Mapping):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return str(value)


def _write_records_csv(path: Path, config, spec, records) -> None:
    param_names = spec.field_names()
    header = [
        "experiment",
        *param_names,
        "replicate",
        "seed_stream",
        "status",
        *spec.metrics,
        "wall_time_s",
    ]
    with open(path, "w", newline="") as fh:
        fh.write(SCHEMA_COMMENT + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for rec in records:
            row = [config.experiment]
            row += [_format_cell(rec.params[name]) for name in param_names]
            row += [str(rec.replicate), rec.seed_stream, rec.status]
            row += [_format_cell(rec.metrics[name]) for name in spec.metrics]
            row.append(_format_cell(rec.wall_time_s))
            writer.writerow(row)


def _jsonify(obj):
    """Make a summary JSON-safe: NaN/inf become null, numpy scalars unwrap."""
    if isinstance(obj, np.generic):
        return _jsonify(obj.item())
    if isinstance(obj, Mapping):
        return {str(key): _jsonify(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(value) for value in obj]
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    return obj
