"""The optimization loop: SANE and the plain-EI baseline.

A run draws an initial design, then for each iteration refits the objective
GP, scores every unexplored candidate and evaluates the winner. SANE scores
with the strategic rule (optionally penalized by the gate) and periodically
checks for new regions of interest; the baseline scores with raw EI.
All randomness derives from ``SaneConfig.seed``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import acquisition as acq
from .archive import Archive, Sample
from .errors import ConfigError, ExhaustedError
from .gate import HARD, MODES, NONE, GateModel, fit_gate, gate_update
from .problem import MAXIMIZE, MINIMIZE, BlackBox, ParameterSpace, lhs_sample, random_sample, snap_to_candidates
from .strategy import Focus, FocusRegistry, RoiEvent, f1_batch, f3_batch, roi_check
from .surrogate import MATERN52, RBF, FitConfig, GpModel, KernelSpec, fit_gp

log = logging.getLogger(__name__)

SANE = "sane"
VANILLA = "vanilla-bo"
LHS = "lhs"
RANDOM = "random"
GOOD = "good"
BAD = "bad"


@dataclass(frozen=True)
class SaneConfig:
    """Settings of one run.

    ``switch`` is the per-iteration exploit (0) / explore (1) schedule; when
    omitted the first half of the iterations exploit and the rest explore.
    ``grid_resolution`` re-discretizes continuous boxes; grid-backed boxes
    keep their own candidates. ``direction`` overrides the box's.
    """

    iterations: int = 50
    check_interval: int = 5
    init_count: int = 10
    init_method: str = RANDOM
    switch: tuple[int, ...] | None = None
    mode: str = SANE
    gate: str = NONE
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec(RBF))
    gate_kernel: KernelSpec = field(default_factory=lambda: KernelSpec(MATERN52))
    acq: acq.AcqConfig = field(default_factory=acq.AcqConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    grid_resolution: int | tuple[int, ...] | None = None
    refit_every: int = 1
    seed: int = 0
    direction: str | None = None
    record_candidates: bool = True

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigError("N", "total iterations must be >= 0")
        if self.check_interval < 1:
            raise ConfigError("n", "check interval must be >= 1")
        if self.init_count < 2:
            raise ConfigError("init_count", "at least two initial samples are required")
        if self.init_method not in (LHS, RANDOM):
            raise ConfigError("init_method", f"must be {LHS!r} or {RANDOM!r}")
        if self.mode not in (SANE, VANILLA):
            raise ConfigError("mode", f"must be {SANE!r} or {VANILLA!r}")
        if self.gate not in MODES:
            raise ConfigError("gate", f"must be one of {MODES}")
        if self.refit_every < 1:
            raise ConfigError("refit_every", "must be >= 1")
        if self.direction not in (None, MAXIMIZE, MINIMIZE):
            raise ConfigError("direction", f"must be {MAXIMIZE!r} or {MINIMIZE!r}")
        if self.switch is not None:
            sw = tuple(int(s) for s in self.switch)
            if any(s not in (0, 1) for s in sw):
                raise ConfigError("switch", "schedule entries must be 0 or 1")
            if len(sw) < self.iterations:
                raise ConfigError("switch", f"schedule has {len(sw)} entries, need {self.iterations}")
            object.__setattr__(self, "switch", sw)

    def schedule(self) -> tuple[int, ...]:
        if self.switch is not None:
            return self.switch
        return half_schedule(self.iterations)


def half_schedule(n: int, switch_at: int | None = None) -> tuple[int, ...]:
    """0 for iterations ``1..switch_at`` (default ``n // 2``), 1 afterwards."""
    at = n // 2 if switch_at is None else switch_at
    return tuple(0 if i <= at else 1 for i in range(1, n + 1))


@dataclass(frozen=True, eq=False)
class CandidateScores:
    """Per-candidate scoring inputs and outputs of one iteration.

    ``indices`` are candidate-grid indices in ascending order; ``f1``,
    ``f3`` and ``c_bar`` are None when unused.
    """

    indices: np.ndarray
    ei: np.ndarray
    f1: np.ndarray | None
    f3: np.ndarray | None
    strategic: np.ndarray
    c_bar: np.ndarray | None
    final: np.ndarray


@dataclass(frozen=True, eq=False)
class IterationRecord:
    iteration: int
    candidate: int
    location: tuple[float, ...]
    raw: float
    ei: float
    g: float
    branch: str
    s: int
    beta: float | None
    c_bar: float | None
    penalized: bool
    focus_count: int
    scores: CandidateScores | None = None


@dataclass(frozen=True)
class GateEvent:
    iteration: int
    n_train: int


@dataclass(eq=False)
class Trace:
    """Complete, immutable-by-convention record of one run."""

    config: SaneConfig
    box_name: str
    direction: str
    candidates: np.ndarray
    candidates_norm: np.ndarray
    init_count: int
    records: list[IterationRecord]
    roi_events: list[RoiEvent]
    gate_events: list[GateEvent]
    archive: Archive
    foci: list[Focus]
    initial_gate: GateModel | None = None
    final_gate: GateModel | None = None
    early_stop: int | None = None

    @property
    def dim(self) -> int:
        return self.candidates.shape[1]

    def explored(self) -> list[Sample]:
        return [s for s in self.archive if s.iteration > 0]

    def best_raw(self) -> float:
        best = self.archive.best()
        return best.raw

    def best_so_far(self) -> list[float]:
        """Best raw value after initialization and after each iteration."""
        sign = 1.0 if self.direction == MAXIMIZE else -1.0
        best = max(s.internal for s in self.archive if s.iteration == 0)
        curve = [sign * best]
        for s in self.explored():
            best = max(best, s.internal)
            curve.append(sign * best)
        return curve

    def without_scores(self) -> "Trace":
        stripped = [replace(r, scores=None) for r in self.records]
        return replace(self, records=stripped)


def prepare_box(config: SaneConfig, box: BlackBox) -> BlackBox:
    if config.grid_resolution is not None and not box.has_exact_candidates:
        box = box.with_space(ParameterSpace(box.space.bounds, config.grid_resolution))
    return box


def _streams(seed: int):
    init, roi = np.random.SeedSequence([int(seed), 11]).spawn(2)
    return init, np.random.default_rng(roi)


def initial_design(config: SaneConfig, box: BlackBox) -> tuple[np.ndarray, list[int]]:
    """Initial candidate indices for ``config``; identical to what :func:`run` uses.

    Returns the prepared candidate set (original units) and the chosen
    indices in evaluation order.
    """
    box = prepare_box(config, box)
    cands = box.candidates()
    norm = box.space.to_norm(cands)
    if config.init_count > cands.shape[0]:
        raise ConfigError("init_count", f"only {cands.shape[0]} candidates available")
    init_seed, _ = _streams(config.seed)
    sampler = lhs_sample if config.init_method == LHS else random_sample
    pts = sampler(config.init_count, box.dim, init_seed)
    return cands, snap_to_candidates(pts, norm)


def _match_labels(labels, cands: np.ndarray, init_idx: Sequence[int]):
    good, bad = [], []
    for loc, lab in labels:
        loc = np.asarray(loc, dtype=float).reshape(-1)
        if lab not in (GOOD, BAD):
            raise ConfigError("labels", f"label must be 'good' or 'bad', got {lab!r}")
        hit = [j for j in init_idx if loc.shape == cands[j].shape and np.allclose(cands[j], loc, rtol=0, atol=1e-9)]
        if not hit:
            raise ConfigError("labels", f"labeled location {tuple(loc)} is not an initial sample")
        (good if lab == GOOD else bad).append(hit[0])
    return good, bad


def run(config: SaneConfig, box: BlackBox, labels: Sequence[tuple[Sequence[float], str]] | None = None) -> Trace:
    """Execute one optimization run and return its trace.

    ``labels`` pairs initial-sample locations (original units) with
    ``"good"`` or ``"bad"``; they are required when the gate is enabled.
    """
    box = prepare_box(config, box)
    direction = config.direction or box.direction
    sign = 1.0 if direction == MAXIMIZE else -1.0
    sane_mode = config.mode == SANE
    cands, init_idx = initial_design(config, box)
    norm = box.space.to_norm(cands)
    _, roi_rng = _streams(config.seed)
    M, dim = cands.shape

    archive = Archive()
    explored = np.zeros(M, dtype=bool)

    def evaluate(j: int, iteration: int) -> Sample:
        raw = box(cands[j])
        s = Sample(len(archive), j, tuple(cands[j]), tuple(norm[j]), raw, sign * raw, iteration)
        archive.append(s)
        explored[j] = True
        return s

    for j in init_idx:
        evaluate(j, 0)
    registry = FocusRegistry()
    registry.append(archive.best())

    gate_model = None
    gate_events: list[GateEvent] = []
    if sane_mode and config.gate != NONE:
        if not labels:
            raise ConfigError("labels", f"gate mode {config.gate!r} requires labels")
        good, bad = _match_labels(labels, cands, init_idx)
        if not good or not bad:
            raise ConfigError("labels", "the gate needs at least one good and one bad label")
        gate_model = fit_gate(norm[good], norm[bad], config.gate_kernel, config.gate, config.fit,
                              seed=config.seed)
        gate_events.append(GateEvent(0, gate_model.n_train))
    initial_gate = gate_model

    schedule = config.schedule()
    records: list[IterationRecord] = []
    roi_events: list[RoiEvent] = []
    last_check = len(archive)
    model: GpModel | None = None
    early_stop = None

    for i in range(1, config.iterations + 1):
        unexplored = np.flatnonzero(~explored)
        if unexplored.size == 0:
            early_stop = i
            log.info("candidate set exhausted before iteration %d", i)
            break
        if model is None or (i - 1) % config.refit_every == 0:
            model = fit_gp(archive.norms(), archive.internal(), config.kernel, config.fit,
                           seed=[int(config.seed), 0, i])
        cn = norm[unexplored]
        mean, var = model.predict_batch(cn)
        ei = acq.expected_improvement_batch(mean, var, float(archive.internal().max()), config.acq.xi)
        g = acq.stability_ratio(ei, config.acq.delta)
        s_i = schedule[i - 1] if i - 1 < len(schedule) else 1

        f1 = f3 = c_bar = None
        beta = None
        if sane_mode:
            branch = acq.branch_for(g, s_i, config.acq.alpha)
            f1 = f1_batch(cn, registry.current.location)
            f3 = f3_batch(cn, registry)
            strategic = acq.strategic_scores(ei, f1, f3, branch, config.acq)
            if gate_model is not None:
                c_bar = gate_model.mean_map(cn)
                beta = acq.compute_beta(strategic)
                final = acq.apply_gate_batch(strategic, c_bar, config.acq, beta)
            else:
                final = strategic
        else:
            branch = acq.PLAIN_EI
            strategic = final = ei

        try:
            pos = acq.select_next(final)
        except ExhaustedError:
            early_stop = i
            break
        chosen = int(unexplored[pos])
        focus_count = registry.k
        sample = evaluate(chosen, i)

        if gate_model is not None and gate_model.mode == HARD:
            gate_model = gate_update(gate_model, norm[chosen])
            gate_events.append(GateEvent(i, gate_model.n_train))

        scores = None
        if config.record_candidates:
            scores = CandidateScores(unexplored, ei, f1, f3, strategic, c_bar, final)
        cb = None if c_bar is None else float(c_bar[pos])
        records.append(IterationRecord(
            i, chosen, sample.location, sample.raw, float(ei[pos]), g, branch, s_i, beta, cb,
            cb is not None and cb < 0, focus_count, scores))

        if sane_mode and i % config.check_interval == 0:
            event = roi_check(archive, registry, last_check, dim, roi_rng, i)
            roi_events.append(event)
            last_check = len(archive)

    return Trace(config, box.name, direction, cands, norm, len(init_idx), records, roi_events, gate_events,
                 archive, list(registry), initial_gate, gate_model, early_stop)


def final_model(trace: Trace) -> GpModel:
    """Objective GP refitted on the whole archive of a finished run."""
    cfg = trace.config
    return fit_gp(trace.archive.norms(), trace.archive.internal(), cfg.kernel, cfg.fit,
                  seed=[int(cfg.seed), 0, cfg.iterations + 1])


def predicted_raw_map(trace: Trace) -> np.ndarray:
    """Final posterior mean over every candidate, in raw output units."""
    sign = 1.0 if trace.direction == MAXIMIZE else -1.0
    return sign * final_model(trace).predict_batch(trace.candidates_norm)[0]


@dataclass
class SweepResult:
    seeds: list[int]
    traces: dict[int, Trace]
    metrics: dict[int, dict]
    aggregates: dict[str, float]


def aggregate(per_seed: dict[int, dict]) -> dict[str, float]:
    """Mean and median of every numeric metric, independent of seed order."""
    keys = sorted({k for m in per_seed.values() for k, v in m.items() if isinstance(v, (int, float)) and v is not None})
    out = {}
    for k in keys:
        vals = [float(per_seed[s][k]) for s in sorted(per_seed) if isinstance(per_seed[s].get(k), (int, float))]
        if vals:
            out[f"mean_{k}"] = math.fsum(vals) / len(vals)
            out[f"median_{k}"] = float(np.median(vals))
    return out


def run_seed_sweep(config: SaneConfig, box: BlackBox, seeds: Sequence[int],
                   labeler: Callable[[np.ndarray], Sequence[str | None]] | None = None,
                   evaluate: Callable[[Trace, BlackBox], dict] | None = None,
                   keep_scores: bool = False) -> SweepResult:
    """Run ``config`` once per seed and aggregate per-run metrics.

    ``labeler`` maps the initial locations (original units) of a seed to
    ``"good"``/``"bad"``/None labels; ``evaluate`` turns a trace into a
    metric dict (defaults to :func:`sane.metrics.evaluate_run`).
    """
    from .metrics import evaluate_run

    if not seeds:
        raise ConfigError("seeds", "at least one seed is required")
    evaluate = evaluate or evaluate_run
    traces, metrics = {}, {}
    for seed in sorted(set(int(s) for s in seeds)):
        cfg = replace(config, seed=seed, record_candidates=keep_scores)
        labels = None
        if labeler is not None and cfg.gate != NONE and cfg.mode == SANE:
            cands, idx = initial_design(cfg, box)
            labels = [(cands[j], lab) for j, lab in zip(idx, labeler(cands[idx])) if lab is not None]
        trace = run(cfg, box, labels)
        traces[seed] = trace
        metrics[seed] = evaluate(trace, prepare_box(cfg, box))
    return SweepResult(sorted(traces), traces, metrics, aggregate(metrics))
