"""Focused locations and region-of-interest discovery.

Distances are L1 in normalized coordinates. Output ratios use internal
(maximization-space) values shifted to a strictly positive scale, see
:func:`positive_shift`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .archive import Archive, Sample
from .errors import ParameterError

SUPERIOR = "superior-sample"
LOCAL_ACCEPTED = "local-accepted"
LOCAL_REJECTED = "local-rejected"
NO_CANDIDATE = "no-candidate"


@dataclass(frozen=True)
class Focus:
    archive_index: int
    location: tuple[float, ...]
    value: float


class FocusRegistry:
    """Ordered, append-only list of focused locations; the last one is current."""

    def __init__(self):
        self._entries: list[Focus] = []

    @classmethod
    def from_samples(cls, samples) -> "FocusRegistry":
        reg = cls()
        for s in samples:
            reg.append(s)
        return reg

    def append(self, sample: Sample) -> Focus:
        if any(f.archive_index == sample.index for f in self._entries):
            raise ValueError(f"sample {sample.index} is already a focus")
        focus = Focus(sample.index, tuple(sample.norm), sample.internal)
        self._entries.append(focus)
        return focus

    @property
    def k(self) -> int:
        return len(self._entries)

    def __len__(self):
        return len(self._entries)

    def __getitem__(self, i) -> Focus:
        return self._entries[i]

    def __iter__(self):
        return iter(self._entries)

    @property
    def current(self) -> Focus:
        if not self._entries:
            raise ParameterError("the focus registry is empty")
        return self._entries[-1]

    def locations(self) -> np.ndarray:
        return np.array([f.location for f in self._entries], dtype=float)

    def previous_locations(self) -> np.ndarray:
        return self.locations()[:-1]


@dataclass(frozen=True)
class RoiEvent:
    iteration: int
    kind: str
    candidate: int | None = None
    f1: float | None = None
    f2: float | None = None
    f3: float | None = None
    F: float | None = None
    p: float | None = None
    accepted: bool | None = None


def _check_dims(a: np.ndarray, b: np.ndarray):
    if a.shape[-1] != b.shape[-1]:
        raise ParameterError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")


def f1(x, focus) -> float:
    """L1 distance between a location and the current focus."""
    x, focus = np.asarray(x, dtype=float), np.asarray(focus, dtype=float)
    _check_dims(x, focus)
    return float(np.sum(np.abs(x - focus)))


def f1_batch(X, focus) -> np.ndarray:
    X, focus = np.atleast_2d(np.asarray(X, dtype=float)), np.asarray(focus, dtype=float)
    _check_dims(X, focus)
    return np.sum(np.abs(X - focus), axis=1)


def positive_shift(values) -> float:
    """Offset ``L`` such that ``value - L >= span`` for every archived value.

    ``L = min - span`` with ``span = max - min`` (1 when all values agree),
    so shifted ratios are unchanged by positive affine rescaling of outputs.
    """
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo
    return lo - (span if span > 0 else 1.0)


def f2(y: float, y_focus: float) -> float:
    """Ratio of a shifted output to the shifted focus output, clamped to [0, 2]."""
    if not y_focus > 0:
        raise ParameterError(f"shifted focus value must be positive, got {y_focus}")
    return float(min(max(y / y_focus, 0.0), 2.0))


def f3(x, registry: FocusRegistry | np.ndarray) -> float:
    """Mean L1 distance to all foci except the current one (0 when there are none)."""
    prev = registry.previous_locations() if isinstance(registry, FocusRegistry) else np.asarray(registry, float)
    x = np.asarray(x, dtype=float)
    if prev.shape[0] == 0:
        return 0.0
    _check_dims(prev, x)
    return float(np.mean(np.sum(np.abs(prev - x), axis=1)))


def f3_batch(X, registry: FocusRegistry | np.ndarray) -> np.ndarray:
    prev = registry.previous_locations() if isinstance(registry, FocusRegistry) else np.asarray(registry, float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if prev.shape[0] == 0:
        return np.zeros(X.shape[0])
    _check_dims(prev, X)
    total = np.zeros(X.shape[0])
    for p in prev:
        total += np.sum(np.abs(X - p), axis=1)
    return total / prev.shape[0]


@dataclass(frozen=True)
class LocalCandidate:
    sample: Sample
    F: float
    f1: float
    f2: float
    f3: float


def local_candidate_search(archive: Archive, registry: FocusRegistry, dim: int) -> LocalCandidate | None:
    """Best sample acquired after the current focus by ``f1 * f2 * f3' / dim``.

    ``f3'`` is ``f3`` once earlier foci exist and 1 before that. Ties go to
    the earliest acquisition.
    """
    focus = registry.current
    eligible = [s for s in archive if s.index > focus.archive_index]
    if not eligible:
        return None
    shift = positive_shift(archive.internal())
    y_focus = focus.value - shift
    best = None
    for s in eligible:
        a = f1(s.norm, focus.location)
        b = f2(s.internal - shift, y_focus)
        c = f3(s.norm, registry)
        F = a * b * (c if registry.k > 1 else 1.0) / dim
        if best is None or F > best.F:
            best = LocalCandidate(s, F, a, b, c)
    return best


def roi_probability(f1_value: float, f2_value: float, dim: int) -> float:
    if f1_value < 0 or f2_value < 0:
        raise ParameterError("f1 and f2 must be >= 0")
    return float(min(max((f1_value + f2_value) / dim, 0.0), 1.0))


def roi_accept(f1_value: float, f2_value: float, dim: int, rng: np.random.Generator) -> tuple[bool, float]:
    """Bernoulli draw with probability ``clamp((f1 + f2) / dim, 0, 1)``.

    Exactly one uniform variate is consumed per call.
    """
    p = roi_probability(f1_value, f2_value, dim)
    return bool(rng.random() < p), p


def roi_check(archive: Archive, registry: FocusRegistry, last_check_index: int, dim: int,
              rng: np.random.Generator, iteration: int = 0) -> RoiEvent:
    """Look for a new region of interest among recent samples; may append a focus.

    ``last_check_index`` is the archive length at the previous check. A
    sample better than the current focus that arrived since then becomes
    the new focus outright; otherwise the best local candidate is accepted
    with probability :func:`roi_probability`.
    """
    focus = registry.current
    recent = [s for s in archive if s.index >= last_check_index]
    superior = [s for s in recent if s.internal > focus.value]
    if superior:
        best = max(superior, key=lambda s: (s.internal, -s.index))
        registry.append(best)
        return RoiEvent(iteration, SUPERIOR, candidate=best.index)

    cand = local_candidate_search(archive, registry, dim)
    if cand is None:
        return RoiEvent(iteration, NO_CANDIDATE)
    accepted, p = roi_accept(cand.f1, cand.f2, dim, rng)
    if accepted:
        registry.append(cand.sample)
    return RoiEvent(iteration, LOCAL_ACCEPTED if accepted else LOCAL_REJECTED, cand.sample.index,
                    cand.f1, cand.f2, cand.f3, cand.F, p, accepted)
