"""Run configuration files (JSON).

Example::

    {
      "problem": {"builtin": "branin-neg"},
      "N": 50, "n": 5, "init_count": 10, "init_method": "random",
      "switch": {"at": 25}, "mode": "sane", "gate": "none",
      "kernel": "rbf", "seed": 0, "output": "out"
    }

Relative paths (``problem.grid``, ``labels``, ``output``) are resolved
against the directory holding the configuration file. ``"labels": "auto"``
labels the initial design of a fake-optima builtin with its own rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from . import benchmarks
from .acquisition import AcqConfig
from .engine import SaneConfig, half_schedule
from .errors import ConfigError
from .problem import BlackBox, NoiseRegion, NoiseSpec, load_grid_blackbox, with_noise
from .surrogate import FitConfig, KernelSpec

_NUM = {"type": "number"}
_INT = {"type": "integer"}

_NOISE = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "global_sigma": {"type": "number", "minimum": 0},
        "seed": _INT,
        "regions": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["lower", "upper"],
                "properties": {
                    "lower": {"type": "array", "items": _NUM},
                    "upper": {"type": "array", "items": _NUM},
                    "sigma": {"type": "number", "minimum": 0},
                    "bias": _NUM,
                },
            },
        },
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["problem"],
    "properties": {
        "problem": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "builtin": {"enum": list(benchmarks.BUILTINS)},
                "grid": {"type": "string"},
                "noise": _NOISE,
            },
        },
        "N": {"type": "integer", "minimum": 0},
        "n": {"type": "integer", "minimum": 1},
        "init_count": {"type": "integer", "minimum": 2},
        "init_method": {"enum": ["lhs", "random"]},
        "switch": {
            "oneOf": [
                {"type": "array", "items": {"enum": [0, 1]}},
                {"type": "object", "additionalProperties": False, "required": ["at"],
                 "properties": {"at": {"type": "integer", "minimum": 0}}},
            ]
        },
        "mode": {"enum": ["sane", "vanilla-bo"]},
        "gate": {"enum": ["none", "relaxed", "hard"]},
        "kernel": {"enum": ["rbf", "matern52"]},
        "gate_kernel": {"enum": ["rbf", "matern52"]},
        "acquisition": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "xi": {"type": "number", "minimum": 0},
                "delta": {"type": "number", "exclusiveMinimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "penalty_P": {"type": "number", "exclusiveMinimum": 0},
                "eps_div": {"type": "number", "minimum": 0},
            },
        },
        "restarts": {"type": "integer", "minimum": 1},
        "grid_resolution": {"oneOf": [{"type": "integer", "minimum": 1},
                                      {"type": "array", "items": {"type": "integer", "minimum": 1}}]},
        "refit_every": {"type": "integer", "minimum": 1},
        "seed": _INT,
        "direction": {"enum": ["maximize", "minimize"]},
        "labels": {"type": "string"},
        "output": {"type": "string"},
        "metrics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "min_count": {"type": "integer", "minimum": 1},
                "bins": {"type": "integer", "minimum": 1},
            },
        },
    },
}


@dataclass
class RunSpec:
    """A validated configuration file: engine settings plus files and problem."""

    config: SaneConfig
    problem: dict
    base_dir: Path
    labels_path: Path | None
    output: Path
    auto_labels: bool = False
    radius: float = 0.2
    min_count: int = 3
    bins: int = 20

    @property
    def builtin(self) -> str | None:
        return self.problem.get("builtin")

    def build_box(self) -> BlackBox:
        if self.builtin:
            box = benchmarks.build(self.builtin, self.config.grid_resolution)
        else:
            try:
                box = load_grid_blackbox(self.base_dir / self.problem["grid"], self.config.direction or "maximize")
            except OSError as exc:
                raise ConfigError("problem.grid", str(exc)) from None
        if "noise" in self.problem:
            nz = self.problem["noise"]
            regions = tuple(NoiseRegion(tuple(r["lower"]), tuple(r["upper"]), r.get("sigma", 0.0), r.get("bias", 0.0))
                            for r in nz.get("regions", []))
            try:
                box = with_noise(box, NoiseSpec(nz.get("global_sigma", 0.0), regions, nz.get("seed", 0)))
            except ValueError as exc:
                raise ConfigError("problem.noise", str(exc)) from None
        return box


def _error_key(err: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in err.absolute_path)
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        return ".".join(filter(None, [path, extra[0] if extra else ""]))
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else ""
        return ".".join(filter(None, [path, missing]))
    return path or "<root>"


def parse_config(doc: dict, base_dir: Path | str = ".", check_labels: bool = True) -> RunSpec:
    """Validate a decoded configuration document and build a :class:`RunSpec`.

    ``check_labels=False`` skips the labels-file checks (used while labeling).
    """
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(list(e.absolute_path)), str(e.absolute_path)))
    if errors:
        err = errors[0]
        raise ConfigError(_error_key(err), err.message)

    base_dir = Path(base_dir)
    problem = doc["problem"]
    if ("builtin" in problem) == ("grid" in problem):
        raise ConfigError("problem", "give exactly one of 'builtin' or 'grid'")

    N = doc.get("N", 50)
    switch = doc.get("switch")
    if isinstance(switch, dict):
        switch = half_schedule(N, switch["at"])
    elif switch is not None and len(switch) < N:
        raise ConfigError("switch", f"schedule has {len(switch)} entries, need {N}")
    acq_cfg = AcqConfig(**doc.get("acquisition", {}))
    fit = FitConfig(restarts=doc.get("restarts", 8))
    res = doc.get("grid_resolution")
    cfg = SaneConfig(
        iterations=N,
        check_interval=doc.get("n", 5),
        init_count=doc.get("init_count", 10),
        init_method=doc.get("init_method", "random"),
        switch=None if switch is None else tuple(switch),
        mode=doc.get("mode", "sane"),
        gate=doc.get("gate", "none"),
        kernel=KernelSpec(doc.get("kernel", "rbf")),
        gate_kernel=KernelSpec(doc.get("gate_kernel", "matern52")),
        acq=acq_cfg,
        fit=fit,
        grid_resolution=tuple(res) if isinstance(res, list) else res,
        refit_every=doc.get("refit_every", 1),
        seed=doc.get("seed", 0),
        direction=doc.get("direction"),
    )
    labels = doc.get("labels")
    auto_labels = labels == "auto"
    if auto_labels and benchmarks.labeler(problem.get("builtin", "")) is None:
        raise ConfigError("labels", "'auto' labels are only available for fake-optima builtins")
    labels_path = base_dir / labels if labels and not auto_labels else None
    if check_labels and cfg.gate != "none" and cfg.mode == "sane":
        if not labels:
            raise ConfigError("labels", f"gate mode {cfg.gate!r} requires a labels file")
        if labels_path is not None and not labels_path.exists():
            raise ConfigError("labels", f"labels file {labels_path} does not exist")
    metrics = doc.get("metrics", {})
    return RunSpec(cfg, problem, base_dir, labels_path, base_dir / doc.get("output", "out"), auto_labels,
                   metrics.get("radius", 0.2), metrics.get("min_count", 3), metrics.get("bins", 20))


def load_config(path, check_labels: bool = True) -> RunSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError("config", str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be an object")
    return parse_config(doc, path.parent, check_labels)


def config_snapshot(cfg: SaneConfig) -> dict:
    """JSON-ready view of the engine settings recorded in summaries."""
    return {
        "N": cfg.iterations,
        "n": cfg.check_interval,
        "init_count": cfg.init_count,
        "init_method": cfg.init_method,
        "switch": list(cfg.schedule()),
        "mode": cfg.mode,
        "gate": cfg.gate,
        "kernel": cfg.kernel.kind,
        "gate_kernel": cfg.gate_kernel.kind,
        "acquisition": {"xi": cfg.acq.xi, "delta": cfg.acq.delta, "alpha": cfg.acq.alpha,
                        "penalty_P": cfg.acq.penalty_P, "eps_div": cfg.acq.eps_div},
        "restarts": cfg.fit.restarts,
        "grid_resolution": cfg.grid_resolution,
        "refit_every": cfg.refit_every,
        "seed": cfg.seed,
        "direction": cfg.direction,
    }
