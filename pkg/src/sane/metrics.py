"""Run-quality metrics."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ParameterError, UndefinedMetricError


def mae_feasible(pred, truth, gate_map=None) -> float:
    """Mean absolute error over cells whose gate value is >= 0 (all cells without a gate)."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ParameterError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    if gate_map is None:
        mask = np.ones(pred.shape, dtype=bool)
    else:
        gate_map = np.asarray(gate_map, dtype=float)
        if gate_map.shape != pred.shape:
            raise ParameterError(f"gate map shape {gate_map.shape} does not match {pred.shape}")
        mask = gate_map >= 0
    if not mask.any():
        raise UndefinedMetricError("no feasible cells")
    return float(np.mean(np.abs(pred[mask] - truth[mask])))


def histogram_similarity(a, b, bins: int = 20, range: tuple[float, float] | None = None) -> float:
    """Histogram intersection ``sum(min(p_i, q_i))`` of two value lists.

    Both lists are binned on a shared range (their joint min/max by
    default) and normalized to unit mass.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise UndefinedMetricError("histogram similarity of an empty list")
    if bins < 1:
        raise ParameterError("bins must be >= 1")
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if range is None:
        range = (lo, hi)
    elif range[0] > lo or range[1] < hi:
        raise ParameterError(f"range {range} does not cover the data [{lo}, {hi}]")
    if range[1] <= range[0]:
        range = (range[0] - 0.5, range[0] + 0.5)
    p = np.histogram(a, bins=bins, range=range)[0] / a.size
    q = np.histogram(b, bins=bins, range=range)[0] / b.size
    return float(min(np.sum(np.minimum(p, q)), 1.0))


def region_counts(locations_norm, optima_norm, radius: float) -> list[int]:
    """Number of locations within L1 ``radius`` of each optimum."""
    if radius <= 0:
        raise ParameterError("radius must be > 0")
    X = np.atleast_2d(np.asarray(locations_norm, dtype=float))
    opt = np.atleast_2d(np.asarray(optima_norm, dtype=float))
    if opt.size == 0:
        raise ParameterError("at least one optimum is required")
    if X.size == 0:
        return [0] * opt.shape[0]
    d = np.sum(np.abs(X[:, None, :] - opt[None, :, :]), axis=2)
    return [int(c) for c in np.sum(d <= radius, axis=0)]


def roi_coverage(trace_or_locations, optima, radius: float = 0.2, min_count: int = 3) -> float:
    """Fraction of optima with at least ``min_count`` explored samples within L1 ``radius``.

    Accepts a trace (its post-initialization samples are used) or an array
    of normalized locations.
    """
    if min_count < 1:
        raise ParameterError("min_count must be >= 1")
    locs = _explored_norm(trace_or_locations)
    counts = region_counts(locs, optima, radius)
    return sum(c >= min_count for c in counts) / len(counts)


def regions_covered(trace_or_locations, optima, radius: float = 0.2, min_count: int = 3) -> int:
    counts = region_counts(_explored_norm(trace_or_locations), optima, radius)
    return sum(c >= min_count for c in counts)


def _explored_norm(obj):
    if hasattr(obj, "explored"):
        return np.array([s.norm for s in obj.explored()], dtype=float).reshape(-1, obj.dim)
    return np.asarray(obj, dtype=float)


@dataclass
class EvaluationReport:
    best_value: float
    mae_feasible: float | None = None
    histogram_similarity: float | None = None
    roi_coverage: float | None = None
    regions_covered: int | None = None
    region_counts: list[int] = field(default_factory=list)
    best_so_far: list[float] = field(default_factory=list)
    feasible_cells: int | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate_trace(trace, box, gate_map=None, radius: float = 0.2, min_count: int = 3,
                   bins: int = 20) -> EvaluationReport:
    """Score a finished run against the box's noise-free truth.

    ``gate_map`` (one value per candidate) restricts the error metrics to
    feasible cells; by default the run's own final gate is used if any.
    """
    from .engine import predicted_raw_map

    pred = predicted_raw_map(trace)
    truth = np.array([box.truth(x) for x in trace.candidates])
    if gate_map is None and trace.final_gate is not None:
        gate_map = trace.final_gate.mean_map(trace.candidates_norm)
    mask = np.ones(truth.shape, dtype=bool) if gate_map is None else np.asarray(gate_map) >= 0
    report = EvaluationReport(best_value=trace.best_raw(), best_so_far=trace.best_so_far())
    if mask.any():
        report.mae_feasible = mae_feasible(pred, truth, gate_map)
        report.histogram_similarity = histogram_similarity(truth[mask], pred[mask], bins)
    report.feasible_cells = int(mask.sum())
    if box.optima is not None:
        opt = box.space.to_norm(box.optima)
        report.region_counts = region_counts(_explored_norm(trace), opt, radius)
        report.regions_covered = sum(c >= min_count for c in report.region_counts)
        report.roi_coverage = report.regions_covered / len(report.region_counts)
    return report


def evaluate_run(trace, box) -> dict:
    """Flat metric dict for seed sweeps."""
    r = evaluate_trace(trace, box)
    return {
        "best_value": r.best_value,
        "mae_feasible": r.mae_feasible,
        "histogram_similarity": r.histogram_similarity,
        "roi_coverage": r.roi_coverage,
        "regions_covered": r.regions_covered,
    }
