"""Built-in benchmark problems.

``fake-optima-1d`` and ``fake-optima-2d`` are smooth multimodal functions
whose measurements are corrupted by a strongly biased noisy region. That
region looks like the best optimum to a purely data-driven search. Each
comes with a labeling rule that marks initial samples in the corrupted
part of the domain as ``bad``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ConfigError
from .problem import MAXIMIZE, BlackBox, NoiseRegion, NoiseSpec, ParameterSpace, branin_neg, with_noise


def _bumps(centers, heights, widths):
    centers = np.atleast_2d(np.asarray(centers, dtype=float))

    def fn(x):
        d2 = np.sum((centers - x) ** 2, axis=1)
        return float(np.sum(np.asarray(heights) * np.exp(-d2 / (2 * np.asarray(widths) ** 2))))

    return fn


FAKE_1D = dict(
    centers=[[0.2], [0.4]], heights=[1.0, 0.6], widths=[0.06, 0.05],
    noise=NoiseSpec(0.02, (NoiseRegion((0.7,), (0.85,), sigma=0.1, bias=1.5),)),
    boundary=0.5,
)
FAKE_2D = dict(
    centers=[[0.25, 0.25], [0.25, 0.75], [0.55, 0.5]], heights=[1.0, 0.8, 0.6], widths=[0.08, 0.08, 0.07],
    noise=NoiseSpec(0.03, (NoiseRegion((0.7, 0.2), (0.95, 0.8), sigma=0.2, bias=1.2),)),
    boundary=0.65,
)


def _fake_optima(spec: dict, resolution, noise_seed: int, name: str) -> BlackBox:
    dim = len(spec["centers"][0])
    space = ParameterSpace(((0.0, 1.0),) * dim, resolution)
    fn = _bumps(spec["centers"], spec["heights"], spec["widths"])
    clean = BlackBox(space, fn, MAXIMIZE, truth=fn, optima=np.array(spec["centers"]), name=name)
    noise = spec["noise"]
    box = with_noise(clean, NoiseSpec(noise.global_sigma, noise.regions, noise_seed))
    box.name = name
    return box


def _half_labeler(boundary: float) -> Callable[[np.ndarray], list[str]]:
    def label(locations):
        return ["good" if float(x[0]) < boundary else "bad" for x in np.atleast_2d(locations)]

    return label


BUILTINS = ("branin-neg", "fake-optima-1d", "fake-optima-2d")


def build(name: str, grid_resolution=None, noise_seed: int = 0) -> BlackBox:
    if name == "branin-neg":
        return branin_neg(grid_resolution or 50)
    if name == "fake-optima-1d":
        return _fake_optima(FAKE_1D, grid_resolution or 101, noise_seed, name)
    if name == "fake-optima-2d":
        return _fake_optima(FAKE_2D, grid_resolution or 30, noise_seed, name)
    raise ConfigError("problem", f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")


def labeler(name: str) -> Callable[[np.ndarray], list[str]] | None:
    """Expert-labeling stand-in for a builtin: bad iff the first coordinate is past the corrupted boundary."""
    if name == "fake-optima-1d":
        return _half_labeler(FAKE_1D["boundary"])
    if name == "fake-optima-2d":
        return _half_labeler(FAKE_2D["boundary"])
    return None
