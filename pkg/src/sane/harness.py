"""Strategy comparison across seeds.

Every strategy is scored with its own metrics (the same numbers a single
``run`` summary reports). When labels are available, each seed also gets a
shared reference mask, the gate fitted on that seed's labeled initial
design, so that error and histogram metrics of ungated strategies can be
compared on the same feasible cells.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import benchmarks
from .engine import BAD, GOOD, SANE, VANILLA, SaneConfig, SweepResult, Trace, initial_design, prepare_box, run_seed_sweep
from .errors import ConfigError, GateInactiveError, UndefinedMetricError
from .gate import HARD, NONE, RELAXED, fit_gate
from .metrics import histogram_similarity, mae_feasible
from .problem import BlackBox

STRATEGIES = ("vanilla-bo", "sane+none", "sane+relaxed", "sane+hard")
COLUMNS = ["strategy", "mean_roi_coverage", "mean_mae_feasible", "mean_best_value", "mean_histogram_similarity",
           "mean_mae_reference", "mean_histogram_reference"]

Labeler = Callable[[np.ndarray], Sequence[str | None]]


def strategy_config(base: SaneConfig, name: str) -> SaneConfig:
    if name == "vanilla-bo":
        return replace(base, mode=VANILLA, gate=NONE)
    mode, _, gate = name.partition("+")
    if mode != SANE or gate not in (NONE, RELAXED, HARD):
        raise ConfigError("strategy", f"unknown strategy {name!r}; choose from {', '.join(STRATEGIES)}")
    return replace(base, mode=SANE, gate=gate)


def strategy_name(cfg: SaneConfig) -> str:
    return "vanilla-bo" if cfg.mode == VANILLA else f"sane+{cfg.gate}"


def file_labeler(rows: Sequence[tuple[Sequence[float], str]]) -> Labeler:
    """Labeler that looks each location up in labeled rows (None when absent)."""
    table = [(np.asarray(loc, dtype=float), lab) for loc, lab in rows]

    def label(locations):
        out = []
        for x in np.atleast_2d(locations):
            hit = [lab for loc, lab in table if loc.shape == x.shape and np.allclose(loc, x, rtol=0, atol=1e-9)]
            out.append(hit[0] if hit else None)
        return out

    return label


def auto_labeler(builtin: str | None) -> Labeler | None:
    return benchmarks.labeler(builtin or "")


def reference_gate_map(cfg: SaneConfig, box: BlackBox, labeler: Labeler) -> np.ndarray | None:
    """Mean gate map of the relaxed gate fitted on ``cfg.seed``'s labeled initial design.

    Returns None when the labels do not cover both classes.
    """
    cands, idx = initial_design(cfg, box)
    labs = list(labeler(cands[idx]))
    norm = prepare_box(cfg, box).space.to_norm(cands)
    good = [j for j, lab in zip(idx, labs) if lab == GOOD]
    bad = [j for j, lab in zip(idx, labs) if lab == BAD]
    try:
        gate = fit_gate(norm[good], norm[bad], cfg.gate_kernel, RELAXED, cfg.fit, seed=cfg.seed)
    except GateInactiveError:
        return None
    return gate.mean_map(norm)


def _with_reference(ref_maps: dict[int, np.ndarray | None], radius: float, min_count: int, bins: int):
    from .engine import predicted_raw_map
    from .metrics import evaluate_trace

    def evaluate(trace: Trace, box: BlackBox) -> dict:
        r = evaluate_trace(trace, box, radius=radius, min_count=min_count, bins=bins)
        out = {"best_value": r.best_value, "mae_feasible": r.mae_feasible,
               "histogram_similarity": r.histogram_similarity, "roi_coverage": r.roi_coverage,
               "regions_covered": r.regions_covered}
        ref = ref_maps.get(trace.config.seed)
        if ref is not None:
            pred = predicted_raw_map(trace)
            truth = np.array([box.truth(x) for x in trace.candidates])
            mask = ref >= 0
            try:
                out["mae_reference"] = mae_feasible(pred, truth, ref)
                out["histogram_reference"] = histogram_similarity(truth[mask], pred[mask], bins)
            except UndefinedMetricError:
                pass
        return out

    return evaluate


@dataclass
class Comparison:
    seeds: list[int]
    results: dict[str, SweepResult]

    def table(self) -> list[dict]:
        rows = []
        for name, res in self.results.items():
            row = {"strategy": name}
            for col in COLUMNS[1:]:
                row[col] = res.aggregates.get(col)
            rows.append(row)
        return rows


def compare(base: SaneConfig, box: BlackBox, seeds: Sequence[int], labeler: Labeler | None = None,
            strategies: Sequence[str] | None = None, radius: float = 0.2, min_count: int = 3,
            bins: int = 20) -> Comparison:
    """Run each strategy over ``seeds`` and aggregate metrics.

    Gated strategies are skipped when no labeler is given.
    """
    if not seeds:
        raise ConfigError("seeds", "at least one seed is required")
    if strategies is None:
        strategies = [s for s in STRATEGIES if labeler is not None or s.endswith(("bo", "none"))]
    seeds = sorted(set(int(s) for s in seeds))
    ref_maps = {}
    if labeler is not None:
        for s in seeds:
            ref_maps[s] = reference_gate_map(replace(base, seed=s), box, labeler)
    evaluate = _with_reference(ref_maps, radius, min_count, bins)
    results = {}
    for name in strategies:
        cfg = strategy_config(base, name)
        if cfg.gate != NONE and labeler is None:
            raise ConfigError("labels", f"strategy {name!r} requires labels")
        results[name] = run_seed_sweep(cfg, box, seeds, labeler=labeler, evaluate=evaluate)
    return Comparison(seeds, results)


def _cell(v) -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return ""
    return repr(float(v)) if isinstance(v, (int, float)) else str(v)


def table_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in COLUMNS])
    return buf.getvalue()


def format_table(rows: list[dict]) -> str:
    """Fixed-width console rendering of a comparison table."""
    heads = ["strategy", "roi_cov", "mae_feas", "best", "hist_sim", "mae_ref", "hist_ref"]
    body = [[row["strategy"]] + ["-" if row.get(c) is None else f"{row[c]:.4g}" for c in COLUMNS[1:]] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in body)) if body else len(h) for i, h in enumerate(heads)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(heads, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in body]
    return "\n".join(lines)


def write_table(path, rows: list[dict]) -> None:
    Path(path).write_text(table_csv(rows))
