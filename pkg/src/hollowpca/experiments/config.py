"""Experiment configuration: declaration, JSON loading, and validation.

A config file is a single JSON object::

    {
      "schema": 1,
      "experiment": "csbm-phase",
      "seed": 20260816,
      "replicates": 100,
      "params": {"n": 500, "d": 2000, "c": 1.5},
      "grid": {"a": [1.0, 2.0, 4.0, 8.0], "b": [1.0]},
      "output": "phase.csv"
    }

Every parameter lives either in ``params`` (fixed) or as a ``grid`` axis
(swept); the grid is the Cartesian product of the axes in the order they
appear, with the last axis varying fastest.  Validation resolves defaults,
type-checks every value, and runs each experiment's own invariant check on
every grid point, collecting all problems into one ConfigError.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

from ..errors import ConfigError, InvalidParameter
from ..kernels import KernelSpec

SCHEMA_VERSION = 1

_REQUIRED = object()


@dataclass(frozen=True)
class ParamField:
    """One experiment parameter: its type, default, and bounds.

    ``kind`` is "int", "float", "str", or "kernel" (a KernelSpec as a JSON
    object, or null).  A field without a default is required.  ``minimum``
    is an inclusive lower bound for the numeric kinds; ``exclusive`` makes
    it strict.  ``grid=False`` forbids sweeping the parameter.
    """

    name: str
    kind: str
    default: Any = _REQUIRED
    choices: tuple[str, ...] | None = None
    minimum: float | None = None
    exclusive: bool = False
    grid: bool = True
    help: str = ""

    @property
    def required(self) -> bool:
        return self.default is _REQUIRED

    def coerce(self, value):
        """Return the canonical value, or raise InvalidParameter."""
        if self.kind == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidParameter(f"{self.name} must be an integer")
            out: Any = int(value)
        elif self.kind == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidParameter(f"{self.name} must be a number")
            out = float(value)
            if out != out or out in (float("inf"), float("-inf")):
                raise InvalidParameter(f"{self.name} must be finite")
        elif self.kind == "str":
            if not isinstance(value, str):
                raise InvalidParameter(f"{self.name} must be a string")
            if self.choices and value not in self.choices:
                raise InvalidParameter(
                    f"{self.name} must be one of {', '.join(self.choices)}; got {value!r}"
                )
            out = value
        elif self.kind == "kernel":
            if value is None:
                return None
            if not isinstance(value, Mapping):
                raise InvalidParameter(f"{self.name} must be a kernel object or null")
            # Round-trip through KernelSpec so bad kinds/parameters fail here,
            # at validation time, and the stored form is canonical.
            return KernelSpec.from_dict(dict(value)).to_dict()
        else:  # pragma: no cover - spec declarations are static
            raise InvalidParameter(f"unknown parameter kind {self.kind!r}")
        if self.minimum is not None:
            if self.exclusive and not out > self.minimum:
                raise InvalidParameter(f"{self.name} must be > {self.minimum}, got {out}")
            if not self.exclusive and not out >= self.minimum:
                raise InvalidParameter(f"{self.name} must be >= {self.minimum}, got {out}")
        return out


@dataclass(frozen=True)
class ExperimentSpec:
    """Declaration of one runnable experiment.

    ``task(params, seed)`` runs a single replicate at one grid point and
    returns its metric values (missing metrics are recorded as NaN; the
    reserved key "_status" downgrades the record's status without raising).
    ``check`` validates cross-parameter invariants of one resolved grid
    point.  ``summarize`` turns the sorted records into the JSON summary
    stored next to the CSV, and ``finalize`` may write extra artifact files.
    """

    name: str
    summary: str
    fields: tuple[ParamField, ...]
    metrics: tuple[str, ...]
    task: Callable[[dict, Any], dict]
    check: Callable[[Mapping[str, Any]], None] | None = None
    summarize: Callable[[Any, list], dict] | None = None
    finalize: Callable[[Any, list, Path], list[Path]] | None = None

    def field_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fields)


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """A validated experiment description with every default resolved.

    ``base`` holds the fixed parameters; ``grid`` the swept axes in file
    order.  Grid point ``i`` is the ``i``-th element of the Cartesian
    product with the last axis varying fastest, and the replicate task for
    (grid point, replicate) = (g, r) draws from ``Seed(seed).child(g, r)``.
    """

    experiment: str
    seed: int
    replicates: int
    base: Mapping[str, Any]
    grid: tuple[tuple[str, tuple[Any, ...]], ...]
    output: str

    @property
    def grid_size(self) -> int:
        size = 1
        for _, values in self.grid:
            size *= len(values)
        return size

    def points(self) -> list[dict[str, Any]]:
        """Resolved parameter dict for every grid point, in grid order."""
        names = [name for name, _ in self.grid]
        out = []
        for combo in itertools.product(*(values for _, values in self.grid)):
            point = dict(self.base)
            point.update(zip(names, combo))
            out.append(point)
        return out

    def point(self, grid_index: int) -> dict[str, Any]:
        return self.points()[grid_index]

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready resolved config; feeding it back yields the same runs."""
        return {
            "schema": SCHEMA_VERSION,
            "experiment": self.experiment,
            "seed": self.seed,
            "replicates": self.replicates,
            "params": dict(self.base),
            "grid": {name: list(values) for name, values in self.grid},
            "output": self.output,
        }


def _check_int(raw, key, problems, minimum=0, maximum=None):
    value = raw.get(key, _REQUIRED)
    if value is _REQUIRED:
        problems.append(f"missing required field {key!r}")
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        problems.append(f"{key} must be an integer")
        return None
    if value < minimum:
        problems.append(f"{key} must be >= {minimum}, got {value}")
        return None
    if maximum is not None and value > maximum:
        problems.append(f"{key} must be at most {maximum}, got {value}")
        return None
    return int(value)


def resolve_config(raw: Mapping[str, Any], registry: Mapping[str, ExperimentSpec]) -> ExperimentConfig:
    """Validate a parsed config object against the experiment registry.

    Raises ConfigError listing every schema violation, unknown or missing
    parameter, type error, and invalid grid point found.
    """
    if not isinstance(raw, Mapping):
        raise ConfigError(["config must be a JSON object"])
    problems: list[str] = []

    schema = raw.get("schema")
    if schema != SCHEMA_VERSION:
        problems.append(f"schema must be {SCHEMA_VERSION}, got {schema!r}")

    name = raw.get("experiment")
    spec = registry.get(name) if isinstance(name, str) else None
    if spec is None:
        known = ", ".join(sorted(registry))
        raise ConfigError(problems + [f"unknown experiment {name!r} (known: {known})"])

    seed = _check_int(raw, "seed", problems, minimum=0, maximum=2**64 - 1)
    replicates = _check_int(raw, "replicates", problems, minimum=1)

    output = raw.get("output", f"{spec.name}.csv")
    if not isinstance(output, str) or not output:
        problems.append("output must be a nonempty file name")
        output = f"{spec.name}.csv"
    elif Path(output).is_absolute():
        problems.append("output must be relative (the run directory is set by --out)")
    if not output.endswith(".csv"):
        output += ".csv"

    known_keys = {"schema", "experiment", "seed", "replicates", "params", "grid", "output"}
    for key in raw:
        if key not in known_keys:
            problems.append(f"unknown top-level field {key!r}")

    params_raw = raw.get("params", {})
    grid_raw = raw.get("grid", {})
    if not isinstance(params_raw, Mapping):
        problems.append("params must be an object")
        params_raw = {}
    if not isinstance(grid_raw, Mapping):
        problems.append("grid must be an object")
        grid_raw = {}

    by_name = {f.name: f for f in spec.fields}
    for key in params_raw:
        if key not in by_name:
            problems.append(f"unknown parameter {key!r} for experiment {spec.name}")
    for key in grid_raw:
        if key not in by_name:
            problems.append(f"unknown grid axis {key!r} for experiment {spec.name}")
        elif key in params_raw:
            problems.append(f"parameter {key!r} appears in both params and grid")
        elif not by_name[key].grid:
            problems.append(f"parameter {key!r} cannot be a grid axis")

    base: dict[str, Any] = {}
    axes: list[tuple[str, tuple[Any, ...]]] = []
    for field in spec.fields:
        if field.name in grid_raw and field.name not in params_raw:
            continue
        value = params_raw.get(field.name, field.default)
        if value is _REQUIRED:
            if field.name in grid_raw:
                continue
            problems.append(f"missing required parameter {field.name!r}")
            continue
        try:
            base[field.name] = field.coerce(value)
        except InvalidParameter as exc:
            problems.append(str(exc))
    for key, values in grid_raw.items():
        field = by_name.get(key)
        if field is None or key in params_raw or not field.grid:
            continue
        if not isinstance(values, list) or not values:
            problems.append(f"grid axis {key!r} must be a nonempty list")
            continue
        coerced = []
        for value in values:
            try:
                coerced.append(field.coerce(value))
            except InvalidParameter as exc:
                problems.append(f"grid axis {key!r}: {exc}")
        if len(coerced) == len(values):
            axes.append((key, tuple(coerced)))

    if problems:
        raise ConfigError(problems)

    config = ExperimentConfig(
        experiment=spec.name,
        seed=seed,
        replicates=replicates,
        base=base,
        grid=tuple(axes),
        output=output,
    )
    if spec.check is not None:
        for index, point in enumerate(config.points()):
            try:
                spec.check(point)
            except InvalidParameter as exc:
                swept = {name: point[name] for name, _ in config.grid}
                problems.append(f"grid point {index} ({swept}): {exc}")
    if problems:
        raise ConfigError(problems)
    return config


def load_config(path, registry: Mapping[str, ExperimentSpec] | None = None) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    if registry is None:
        from .runners import EXPERIMENTS as registry
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path} is not valid JSON: {exc}"]) from exc
    return resolve_config(raw, registry)
