"""Search spaces, black-box objectives and initial designs.

Every black box maps a location in original units to a real value. The
engine works in the normalized unit cube of a :class:`ParameterSpace` and
on a finite candidate set, either the regular grid of the space or the
exact coordinates of a tabulated dataset.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DomainError, ParameterError, ParseError

MAXIMIZE = "maximize"
MINIMIZE = "minimize"


@dataclass(frozen=True)
class ParameterSpace:
    """Box-bounded search domain with an affine map onto ``[0, 1]^dim``.

    Parameters
    ----------
    bounds : sequence of (lower, upper)
        Per-dimension limits in original units.
    grid_resolution : int or sequence of int
        Number of evenly spaced candidate points per dimension.
    """

    bounds: tuple[tuple[float, float], ...]
    grid_resolution: tuple[int, ...] = (50,)

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if not bounds:
            raise ParameterError("a parameter space needs at least one dimension")
        for m, (lo, hi) in enumerate(bounds):
            if not lo < hi:
                raise ParameterError(f"dimension {m}: lower bound {lo} must be below upper bound {hi}")
        res = self.grid_resolution
        if isinstance(res, (int, np.integer)):
            res = (int(res),) * len(bounds)
        res = tuple(int(r) for r in res)
        if len(res) == 1 and len(bounds) > 1:
            res = res * len(bounds)
        if len(res) != len(bounds) or any(r < 1 for r in res):
            raise ParameterError(f"grid_resolution {res} does not match {len(bounds)} dimensions")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "grid_resolution", res)

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    def to_norm(self, x) -> np.ndarray:
        """Map original-unit locations (``(..., dim)``) onto the unit cube."""
        x = np.asarray(x, dtype=float)
        return (x - self.lower) / (self.upper - self.lower)

    def from_norm(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.lower + u * (self.upper - self.lower)

    def grid(self) -> np.ndarray:
        """Candidate grid in original units, row-major over dimensions.

        Single-point axes sit at the midpoint of their bounds.
        """
        axes = []
        for (lo, hi), r in zip(self.bounds, self.grid_resolution):
            axes.append(np.array([(lo + hi) / 2.0]) if r == 1 else np.linspace(lo, hi, r))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


class BlackBox:
    """Expensive objective queried one location at a time.

    Parameters
    ----------
    space : ParameterSpace
    fn : callable
        Maps a 1-D array in original units to a float.
    direction : {"maximize", "minimize"}
    candidates : ndarray, optional
        Exact finite candidate set in original units. When absent, the
        regular grid of ``space`` is used.
    truth : callable, optional
        Noise-free version of ``fn`` used for evaluation metrics.
    optima : ndarray, optional
        Known true optimum locations in original units.
    """

    def __init__(
        self,
        space: ParameterSpace,
        fn: Callable[[np.ndarray], float],
        direction: str = MAXIMIZE,
        candidates: np.ndarray | None = None,
        truth: Callable[[np.ndarray], float] | None = None,
        optima: np.ndarray | None = None,
        name: str = "blackbox",
    ):
        if direction not in (MAXIMIZE, MINIMIZE):
            raise ParameterError(f"direction must be {MAXIMIZE!r} or {MINIMIZE!r}, got {direction!r}")
        self.space = space
        self._fn = fn
        self.direction = direction
        self._candidates = None if candidates is None else np.array(candidates, dtype=float)
        self._truth = truth
        self.optima = None if optima is None else np.atleast_2d(np.asarray(optima, dtype=float))
        self.name = name

    @property
    def dim(self) -> int:
        return self.space.dim

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise DomainError(f"expected a {self.dim}-dimensional location, got {x.shape[0]}")
        return float(self._fn(x))

    def truth(self, x) -> float:
        if self._truth is None:
            return self(x)
        return float(self._truth(np.asarray(x, dtype=float).reshape(-1)))

    def candidates(self) -> np.ndarray:
        if self._candidates is not None:
            return self._candidates.copy()
        return self.space.grid()

    @property
    def has_exact_candidates(self) -> bool:
        return self._candidates is not None

    def with_space(self, space: ParameterSpace) -> "BlackBox":
        """Same objective discretized differently (continuous boxes only)."""
        if self._candidates is not None:
            raise ParameterError("grid-backed black boxes have a fixed candidate set")
        return BlackBox(space, self._fn, self.direction, None, self._truth, self.optima, self.name)

    def negated(self) -> "BlackBox":
        """Negated objective with the opposite direction."""
        fn, truth = self._fn, self._truth
        neg_truth = None if truth is None else (lambda x: -truth(x))
        flipped = MINIMIZE if self.direction == MAXIMIZE else MAXIMIZE
        return BlackBox(self.space, lambda x: -fn(x), flipped, self._candidates, neg_truth,
                        self.optima, self.name + "-negated")


# ---------------------------------------------------------------------------
# Branin

BRANIN_DOMAIN = ((-5.0, 15.0), (-5.0, 15.0))
BRANIN_OPTIMA = np.array([[-math.pi, 12.275], [math.pi, 2.275], [3 * math.pi, 2.475]])


def branin(x1: float, x2: float) -> float:
    """Branin test function on ``[-5, 15]^2`` (three minima of 0.397887)."""
    for v in (x1, x2):
        if not (-5.0 <= v <= 15.0) or math.isnan(v):
            raise DomainError(f"Branin is defined on [-5, 15]^2, got ({x1}, {x2})")
    a, r, s = 1.0, 6.0, 10.0
    b = 5.1 / (4.0 * math.pi**2)
    c = 5.0 / math.pi
    t = 1.0 / (8.0 * math.pi)
    return a * (x2 - b * x1**2 + c * x1 - r) ** 2 + s * (1.0 - t) * math.cos(x1) + s


def branin_neg(grid_resolution=50) -> BlackBox:
    """Negated Branin as a maximization problem with its three true optima."""
    space = ParameterSpace(BRANIN_DOMAIN, grid_resolution)

    def fn(x):
        return -branin(x[0], x[1])

    return BlackBox(space, fn, MAXIMIZE, optima=BRANIN_OPTIMA, name="branin-neg")


# ---------------------------------------------------------------------------
# Tabulated datasets


def load_grid_blackbox(path, direction: str = MAXIMIZE) -> BlackBox:
    """Load a rectangular grid dataset from CSV.

    The header is ``x1,...,xd,y``; each following row holds one grid point.
    Evaluation is exact table lookup and off-grid queries raise
    :class:`DomainError`.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: line 1: empty file")
    header = [h.strip() for h in rows[0]]
    dim = len(header) - 1
    if dim < 1 or header[-1] != "y" or header[:-1] != [f"x{m + 1}" for m in range(dim)]:
        raise ParseError(f"{path}: line 1: header must be x1,...,xd,y, got {','.join(header)}")

    table: dict[tuple[float, ...], float] = {}
    coords = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != dim + 1:
            raise ParseError(f"{path}: line {lineno}: expected {dim + 1} fields, got {len(row)}")
        try:
            values = [float(c) for c in row]
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: non-numeric field in {row}") from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError(f"{path}: line {lineno}: non-finite value")
        key = tuple(values[:dim])
        if key in table:
            raise ParseError(f"{path}: line {lineno}: duplicate coordinate {key}")
        table[key] = values[dim]
        coords.append(key)
    if not coords:
        raise ParseError(f"{path}: line 2: no data rows")

    axes = [sorted({c[m] for c in coords}) for m in range(dim)]
    if len(coords) != math.prod(len(a) for a in axes):
        missing = next(p for p in itertools.product(*axes) if p not in table)
        raise ParseError(f"{path}: line {len(rows) + 1}: incomplete grid, missing coordinate {missing}")

    bounds = []
    for a in axes:
        # a single-valued axis gets a unit-width box centred on its value
        bounds.append((a[0], a[-1]) if len(a) > 1 else (a[0] - 0.5, a[0] + 0.5))
    space = ParameterSpace(tuple(bounds), tuple(len(a) for a in axes))
    candidates = np.array(sorted(coords), dtype=float)

    def lookup(x):
        key = tuple(float(v) for v in x)
        try:
            return table[key]
        except KeyError:
            raise DomainError(f"{key} is not a grid point of {path.name}") from None

    return BlackBox(space, lookup, direction, candidates=candidates, name=path.stem)


def write_grid_csv(path, points, values) -> None:
    """Write a grid dataset in the format read by :func:`load_grid_blackbox`."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dim = points.shape[1]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{m + 1}" for m in range(dim)] + ["y"])
        for p, v in zip(points, values):
            w.writerow([repr(float(c)) for c in p] + [repr(float(v))])


# ---------------------------------------------------------------------------
# Noise


@dataclass(frozen=True)
class NoiseRegion:
    """Axis-aligned box in normalized space with its own noise level and bias."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    sigma: float = 0.0
    bias: float = 0.0

    def contains(self, u: np.ndarray) -> bool:
        return bool(np.all(u >= np.asarray(self.lower)) and np.all(u <= np.asarray(self.upper)))


@dataclass(frozen=True)
class NoiseSpec:
    global_sigma: float = 0.0
    regions: tuple[NoiseRegion, ...] = field(default_factory=tuple)
    seed: int = 0

    def __post_init__(self):
        if self.global_sigma < 0:
            raise ParameterError("global_sigma must be >= 0")
        regions = tuple(r if isinstance(r, NoiseRegion) else NoiseRegion(**r) for r in self.regions)
        for r in regions:
            lo, hi = np.asarray(r.lower, float), np.asarray(r.upper, float)
            if r.sigma < 0:
                raise ParameterError("region sigma must be >= 0")
            if lo.shape != hi.shape or np.any(lo < 0) or np.any(hi > 1) or np.any(lo > hi):
                raise ParameterError(f"noise region {r} must lie inside the unit cube")
        object.__setattr__(self, "regions", regions)


def _location_rng(seed: int, x: np.ndarray) -> np.random.Generator:
    digest = hashlib.blake2b(np.ascontiguousarray(x, dtype="<f8").tobytes(), digest_size=16).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(seed)] + words))


def with_noise(base: BlackBox, spec: NoiseSpec) -> BlackBox:
    """Wrap ``base`` with location-keyed Gaussian noise and biased regions.

    Inside the first matching region the region's sigma and bias replace the
    global sigma. The draw depends only on ``(spec.seed, location)``, so
    re-evaluating a location reproduces its value.
    """
    for r in spec.regions:
        if len(r.lower) != base.dim or len(r.upper) != base.dim:
            raise ParameterError(f"noise region {r} does not match dimension {base.dim}")
    space = base.space

    def fn(x):
        value = base(x)
        u = space.to_norm(x)
        sigma, bias = spec.global_sigma, 0.0
        for region in spec.regions:
            if region.contains(u):
                sigma, bias = region.sigma, region.bias
                break
        if sigma > 0:
            value += sigma * _location_rng(spec.seed, x).standard_normal()
        return value + bias

    cands = base.candidates() if base.has_exact_candidates else None
    return BlackBox(space, fn, base.direction, cands, base.truth, base.optima, base.name + "+noise")


# ---------------------------------------------------------------------------
# Initial designs


def lhs_sample(count: int, space: ParameterSpace | int, seed=None) -> np.ndarray:
    """Latin hypercube design in normalized coordinates.

    Each dimension is cut into ``count`` equal strata holding exactly one
    point; strata are paired across dimensions by independent random
    permutations and each point is uniform inside its cell.
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    dim = space if isinstance(space, int) else space.dim
    rng = np.random.default_rng(seed)
    out = np.empty((count, dim))
    for m in range(dim):
        out[:, m] = (rng.permutation(count) + rng.random(count)) / count
    return out


def random_sample(count: int, space: ParameterSpace | int, seed=None) -> np.ndarray:
    if count < 1:
        raise ParameterError("count must be >= 1")
    dim = space if isinstance(space, int) else space.dim
    return np.random.default_rng(seed).random((count, dim))


def snap_to_candidates(points_norm: np.ndarray, candidates_norm: np.ndarray) -> list[int]:
    """Nearest distinct candidate (Euclidean, normalized) for each point, in order."""
    taken: set[int] = set()
    out = []
    for p in np.atleast_2d(points_norm):
        d = np.sum((candidates_norm - p) ** 2, axis=1)
        for idx in np.argsort(d, kind="stable"):
            if int(idx) not in taken:
                taken.add(int(idx))
                out.append(int(idx))
                break
        else:
            raise ParameterError("more initial points than candidates")
    return out

