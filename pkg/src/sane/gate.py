"""Human-labeled feasibility gate.

Initial samples labeled good or bad define a distance-based constraint
``c(x) = mean L1 distance to bad - mean L1 distance to good``; positive
values are feasible. A GP fitted to ``c`` gives the mean gate map used to
penalize acquisition scores. In ``hard`` mode every newly explored location
is auto-labeled with ``c`` (against the fixed initial labels) and the GP is
refitted; in ``relaxed`` mode the initial fit is never updated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GateInactiveError, ParameterError
from .surrogate import MATERN52, FitConfig, GpModel, KernelSpec, fit_gp

NONE = "none"
RELAXED = "relaxed"
HARD = "hard"
MODES = (NONE, RELAXED, HARD)


def _rows(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a.reshape(0, 0) if a.size == 0 else np.atleast_2d(a)


@dataclass(frozen=True, eq=False)
class GateData:
    good: np.ndarray
    bad: np.ndarray

    def __post_init__(self):
        good, bad = _rows(self.good), _rows(self.bad)
        if good.size and bad.size and good.shape[1] != bad.shape[1]:
            raise ParameterError("good and bad locations differ in dimension")
        object.__setattr__(self, "good", good)
        object.__setattr__(self, "bad", bad)

    @property
    def n_good(self) -> int:
        return self.good.shape[0]

    @property
    def n_bad(self) -> int:
        return self.bad.shape[0]

    @property
    def active(self) -> bool:
        return self.n_good >= 1 and self.n_bad >= 1

    def swapped(self) -> "GateData":
        return GateData(self.bad, self.good)


def constraint_values(X, data: GateData) -> np.ndarray:
    """Constraint ``d_bad - d_good`` at each row of ``X`` (normalized)."""
    if not data.active:
        raise GateInactiveError(f"gate needs both classes, got {data.n_good} good and {data.n_bad} bad")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d_good = np.mean(np.sum(np.abs(X[:, None, :] - data.good[None, :, :]), axis=2), axis=1)
    d_bad = np.mean(np.sum(np.abs(X[:, None, :] - data.bad[None, :, :]), axis=2), axis=1)
    return d_bad - d_good


def constraint_value(x, data: GateData) -> float:
    return float(constraint_values(np.asarray(x, dtype=float).reshape(1, -1), data)[0])


@dataclass(frozen=True, eq=False)
class GateModel:
    """Fitted gate; replaced rather than mutated by :func:`gate_update`."""

    data: GateData
    X: np.ndarray
    c: np.ndarray
    surrogate: GpModel
    mode: str
    kernel: KernelSpec
    fit_config: FitConfig
    seed: int

    @property
    def n_train(self) -> int:
        return self.X.shape[0]

    def mean_map(self, candidates) -> np.ndarray:
        return self.surrogate.predict_batch(candidates)[0]


def _fit(data, X, mode, kernel, fit_config, seed) -> GateModel:
    X = np.array(X, dtype=float)
    c = constraint_values(X, data)
    surrogate = fit_gp(X, c, kernel, fit_config, seed=(seed, X.shape[0]))
    X.setflags(write=False)
    c.setflags(write=False)
    return GateModel(data, X, c, surrogate, mode, kernel, fit_config, seed)


def fit_gate(good, bad, kernel: KernelSpec | None = None, mode: str = HARD,
             fit_config: FitConfig | None = None, seed: int = 0) -> GateModel:
    """Fit the gate surrogate on the labeled initial locations.

    Raises :class:`GateInactiveError` unless both classes are present.
    """
    if mode not in (RELAXED, HARD):
        raise ParameterError(f"gate mode must be {RELAXED!r} or {HARD!r}, got {mode!r}")
    data = GateData(good, bad)
    if not data.active:
        raise GateInactiveError(f"gate needs both classes, got {data.n_good} good and {data.n_bad} bad")
    X = np.vstack([data.good, data.bad])
    return _fit(data, X, mode, kernel or KernelSpec(MATERN52), fit_config or FitConfig(), seed)


def gate_mean_map(model: GateModel | None, candidates) -> np.ndarray | None:
    if model is None:
        return None
    return model.mean_map(candidates)


def gate_update(model: GateModel | None, location) -> GateModel | None:
    """Hard mode: auto-label ``location`` and refit. Other modes: identity."""
    if model is None or model.mode != HARD:
        return model
    X = np.vstack([model.X, np.asarray(location, dtype=float).reshape(1, -1)])
    return _fit(model.data, X, model.mode, model.kernel, model.fit_config, model.seed)
