"""Candidate scoring: expected improvement, the stability ratio, the
three-branch strategic score and the gate penalty.

Vectorized helpers perform exactly the same floating-point operations as
their scalar counterparts, element by element, so a score can be replayed
bit-for-bit from its recorded inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ExhaustedError, ParameterError
from .surrogate import Prediction

EXPLOIT = "exploit"
EXPLORE = "explore"
LOCALIZED = "localized"
PLAIN_EI = "ei"

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class AcqConfig:
    """Acquisition constants.

    xi : EI margin.
    delta : additive guard of the stability ratio.
    alpha : stability ratio at or above which the localized rule applies.
    penalty_P : gate penalty multiplier.
    eps_div : guard added to the exploit-branch denominator.
    """

    xi: float = 0.01
    delta: float = 1e-5
    alpha: float = 0.9
    penalty_P: float = 1000.0
    eps_div: float = 1e-8

    def __post_init__(self):
        if self.xi < 0:
            raise ParameterError("xi must be >= 0")
        if not 0 < self.alpha <= 1:
            raise ParameterError("alpha must lie in (0, 1]")
        if self.delta <= 0:
            raise ParameterError("delta must be > 0")
        if self.penalty_P <= 0:
            raise ParameterError("penalty_P must be > 0")
        if self.eps_div < 0:
            raise ParameterError("eps_div must be >= 0")


@dataclass(frozen=True)
class ScoredCandidate:
    index: int
    location: tuple[float, ...]
    ei: float
    strategic: float
    branch: str
    c_bar: float | None
    final: float


def expected_improvement_batch(mean, variance, y_best: float, xi: float = 0.01) -> np.ndarray:
    """EI for maximization at each (mean, variance) pair; zero where variance is zero."""
    mean = np.asarray(mean, dtype=float)
    sigma = np.sqrt(np.maximum(np.asarray(variance, dtype=float), 0.0))
    imp = mean - y_best - xi
    out = np.zeros_like(mean)
    pos = sigma > 0
    z = imp[pos] / sigma[pos]
    out[pos] = imp[pos] * ndtr(z) + sigma[pos] * (_INV_SQRT_2PI * np.exp(-0.5 * z * z))
    return np.maximum(out, 0.0)


def expected_improvement(pred: Prediction, y_best: float, xi: float = 0.01) -> float:
    if pred.variance < 0:
        raise ParameterError("predictive variance must be >= 0")
    return float(expected_improvement_batch([pred.mean], [pred.variance], y_best, xi)[0])


def stability_ratio(ei_values, delta: float = 1e-5) -> float:
    """``(max + delta) / (sum + delta)`` over the unexplored candidates.

    The sum is exactly rounded (``math.fsum``), so the value does not depend
    on candidate order.
    """
    vals = [float(v) for v in ei_values]
    if not vals:
        raise ParameterError("stability_ratio needs at least one value")
    if min(vals) < 0:
        raise ParameterError("EI values must be >= 0")
    return (max(vals) + delta) / (math.fsum(vals) + delta)


def branch_for(g: float, s: int, alpha: float) -> str:
    if g >= alpha:
        return LOCALIZED
    return EXPLORE if s else EXPLOIT


def strategic_score(ei: float, f1: float, f3: float, g: float, s_i: int, cfg: AcqConfig = AcqConfig()) -> float:
    branch = branch_for(g, s_i, cfg.alpha)
    if branch == LOCALIZED:
        return f3 - f1
    if branch == EXPLORE:
        return ei * (f1 + f3)
    return ei / (f1 + f3 + cfg.eps_div)


def strategic_scores(ei, f1, f3, branch: str, cfg: AcqConfig = AcqConfig()) -> np.ndarray:
    ei, f1, f3 = (np.asarray(a, dtype=float) for a in (ei, f1, f3))
    if branch == LOCALIZED:
        return f3 - f1
    if branch == EXPLORE:
        return ei * (f1 + f3)
    if branch == EXPLOIT:
        return ei / (f1 + f3 + cfg.eps_div)
    raise ParameterError(f"unknown branch {branch!r}")


def compute_beta(scores) -> float:
    """Smallest power of ten at or above the largest positive score (1 if none)."""
    scores = [float(s) for s in scores]
    if not scores:
        raise ParameterError("compute_beta needs at least one score")
    top = max(scores)
    if not top > 0 or not math.isfinite(top):
        return 1.0
    e = math.ceil(math.log10(top))
    # guard against log10 rounding at exact powers of ten
    while 10.0**e < top:
        e += 1
    while 10.0 ** (e - 1) >= top:
        e -= 1
    return 10.0**e


def apply_gate(score: float, c_bar: float, cfg: AcqConfig = AcqConfig(), beta: float = 1.0) -> float:
    if beta <= 0:
        raise ParameterError("beta must be > 0")
    if c_bar >= 0:
        return score
    return score + cfg.penalty_P * beta * c_bar


def apply_gate_batch(scores, c_bar, cfg: AcqConfig, beta: float) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    c_bar = np.asarray(c_bar, dtype=float)
    return np.where(c_bar >= 0, scores, scores + cfg.penalty_P * beta * c_bar)


def select_next(scores) -> int:
    """Position of the largest score; ties go to the lowest position.

    Given :class:`ScoredCandidate` objects, returns the winner's candidate
    index instead.
    """
    if len(scores) == 0:
        raise ExhaustedError("no unexplored candidates remain")
    if isinstance(scores[0], ScoredCandidate):
        return scores[select_next([c.final for c in scores])].index
    return int(np.argmax(np.asarray(scores, dtype=float)))
