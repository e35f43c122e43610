"""Gaussian-process regression used for both the objective and the gate.

Inputs live in the normalized unit cube. Outputs are standardized before
fitting and de-standardized on prediction; the latent process has zero
mean. Hyperparameters (per-dimension length-scales, signal variance and
noise variance) are chosen by multi-start maximization of the log marginal
likelihood in log-parameter space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky
from scipy.linalg.lapack import dpotrf, dpotri
from scipy.optimize import minimize

from .errors import GpFitError, ParameterError

RBF = "rbf"
MATERN52 = "matern52"
_KINDS = {"rbf": RBF, "matern52": MATERN52, "matern": MATERN52}
_SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class KernelSpec:
    """Correlation function selector: ``"rbf"`` or ``"matern52"``."""

    kind: str = RBF

    def __post_init__(self):
        kind = _KINDS.get(str(self.kind).lower().replace("-", "").replace("_", ""))
        if kind is None:
            raise ParameterError(f"unsupported kernel {self.kind!r}; use 'rbf' or 'matern52'")
        object.__setattr__(self, "kind", kind)


def _pairwise_diff(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A[:, None, :] - B[None, :, :]


def _correlation(kind: str, diff: np.ndarray, theta: np.ndarray) -> np.ndarray:
    scaled = diff / theta
    sq = np.sum(scaled * scaled, axis=-1)
    if kind == RBF:
        return np.exp(-0.5 * sq)
    # Matern 5/2 on the length-scaled Euclidean distance; in one dimension
    # this equals the per-dimension-sum form exactly.
    r = np.sqrt(sq)
    return (1.0 + _SQRT5 * r + (5.0 / 3.0) * sq) * np.exp(-_SQRT5 * r)


def kernel_matrix(spec: KernelSpec, theta, A, B) -> np.ndarray:
    """Correlation matrix ``R(A_i, B_j)`` for location sets ``A`` and ``B``."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if np.any(theta <= 0) or not np.all(np.isfinite(theta)):
        raise ParameterError(f"length-scales must be positive, got {theta}")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1] or A.shape[1] != theta.shape[0]:
        raise ParameterError(f"dimension mismatch: {A.shape[1]}, {B.shape[1]}, theta {theta.shape[0]}")
    return _correlation(spec.kind, _pairwise_diff(A, B), theta)


def kernel_eval(spec: KernelSpec, theta, xi, xj) -> float:
    """Correlation between two single locations."""
    return float(kernel_matrix(spec, theta, xi, xj)[0, 0])


def _correlation_grads(kind: str, diff: np.ndarray, theta: np.ndarray):
    """Correlation matrix and its derivatives w.r.t. each log length-scale."""
    scaled = diff / theta
    s2 = scaled * scaled
    sq = np.sum(s2, axis=-1)
    if kind == RBF:
        R = np.exp(-0.5 * sq)
        return R, [R * s2[..., m] for m in range(theta.shape[0])]
    r = np.sqrt(sq)
    e = np.exp(-_SQRT5 * r)
    R = (1.0 + _SQRT5 * r + (5.0 / 3.0) * sq) * e
    common = (5.0 / 3.0) * (1.0 + _SQRT5 * r) * e
    return R, [common * s2[..., m] for m in range(theta.shape[0])]


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameter search settings.

    Bounds apply to standardized outputs. ``fixed`` pins
    ``(theta, signal_variance, noise_variance)`` and skips the search.
    """

    restarts: int = 8
    theta_bounds: tuple[float, float] = (1e-2, 1e2)
    signal_bounds: tuple[float, float] = (1e-4, 1e2)
    noise_bounds: tuple[float, float] = (1e-8, 1.0)
    jitter: float = 1e-6
    max_jitter: float = 1e-2
    maxiter: int = 200
    fixed: tuple | None = None


@dataclass(frozen=True)
class Prediction:
    mean: float
    variance: float

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class RestartInfo:
    index: int
    start_lml: float
    final_lml: float


@dataclass(frozen=True, eq=False)
class GpModel:
    """A fitted GP; immutable and safe to share between readers."""

    spec: KernelSpec
    theta: np.ndarray
    signal_variance: float
    noise_variance: float
    jitter: float
    y_mean: float
    y_std: float
    X: np.ndarray
    y: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    K_inv: np.ndarray
    lml: float
    restarts: tuple[RestartInfo, ...] = field(default=())

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def predict(self, x) -> Prediction:
        mean, var = self.predict_batch(np.asarray(x, dtype=float).reshape(1, -1))
        return Prediction(float(mean[0]), float(var[0]))

    def predict_batch(self, Xs) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance (raw output units) at each row of ``Xs``.

        Each row is computed independently of the others, so results do not
        depend on how a query set is batched.
        """
        Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
        if Xs.shape[1] != self.dim:
            raise ParameterError(f"expected {self.dim}-dimensional locations, got {Xs.shape[1]}")
        ks = self.signal_variance * _correlation(self.spec.kind, _pairwise_diff(Xs, self.X), self.theta)
        mean_std = np.einsum("ij,j->i", ks, self.alpha)
        quad = np.einsum("ij,ij->i", np.einsum("ij,jk->ik", ks, self.K_inv), ks)
        var_std = self.signal_variance + self.noise_variance - quad
        mean = self.y_mean + self.y_std * mean_std
        var = np.maximum(var_std, 0.0) * self.y_std**2
        return mean, var

    def prior_variance(self) -> float:
        return (self.signal_variance + self.noise_variance) * self.y_std**2


def predict(model: GpModel, x) -> Prediction:
    return model.predict(x)


def _merge_duplicates(X: np.ndarray, y: np.ndarray):
    uniq, inverse = np.unique(X, axis=0, return_inverse=True)
    if uniq.shape[0] == X.shape[0]:
        return X, y
    inverse = inverse.reshape(-1)
    sums = np.zeros(uniq.shape[0])
    counts = np.zeros(uniq.shape[0])
    np.add.at(sums, inverse, y)
    np.add.at(counts, inverse, 1.0)
    return uniq, sums / counts


def _factorize(K: np.ndarray, jitter: float, max_jitter: float):
    n = K.shape[0]
    j = jitter
    while True:
        try:
            return cholesky(K + j * np.eye(n), lower=True), j
        except LinAlgError:
            j *= 10.0
            if j > max_jitter * (1 + 1e-12):
                raise GpFitError(f"covariance not positive definite with jitter up to {max_jitter}") from None


def _unpack(p: np.ndarray, d: int):
    return np.exp(p[:d]), math.exp(p[d]), math.exp(p[d + 1])


def _chol_inverse(K: np.ndarray):
    """Lower Cholesky factor and inverse of ``K``; None if not positive definite."""
    L, info = dpotrf(K, lower=1, clean=1)
    if info != 0:
        return None
    Kinv, info = dpotri(L, lower=1)
    if info != 0:
        return None
    Kinv = np.tril(Kinv) + np.tril(Kinv, -1).T
    return L, Kinv


def _neg_lml(p, diff, yt, kind, jitter, want_grad=True):
    d = diff.shape[-1]
    theta, s2, n2 = _unpack(p, d)
    n = yt.shape[0]
    if want_grad:
        R, dR = _correlation_grads(kind, diff, theta)
    else:
        R = _correlation(kind, diff, theta)
    K = s2 * R
    K[np.diag_indices(n)] += n2 + jitter
    fac = _chol_inverse(K)
    if fac is None:
        return (1e25, np.zeros_like(p)) if want_grad else 1e25
    L, Kinv = fac
    alpha = Kinv @ yt
    lml = -0.5 * yt @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * math.log(2 * math.pi)
    if not want_grad:
        return -lml
    W = np.outer(alpha, alpha) - Kinv
    grad = np.empty_like(p)
    for m in range(d):
        grad[m] = 0.5 * s2 * np.vdot(W, dR[m])
    grad[d] = 0.5 * s2 * np.vdot(W, R)
    grad[d + 1] = 0.5 * n2 * np.trace(W)
    return -lml, -grad


def log_marginal_likelihood(X, y, spec: KernelSpec, theta, signal_variance, noise_variance,
                            jitter: float = 1e-6) -> float:
    """Log marginal likelihood of standardized ``y`` under the given hyperparameters."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    X, y = _merge_duplicates(X, y)
    yt = _standardize(y)[0]
    p = np.concatenate([np.log(np.asarray(theta, float).reshape(-1)),
                        [math.log(signal_variance), math.log(noise_variance)]])
    return -_neg_lml(p, _pairwise_diff(X, X), yt, spec.kind, jitter, want_grad=False)


def _standardize(y: np.ndarray):
    mu = float(np.mean(y))
    sd = float(np.std(y))
    if not sd > 1e-12 * max(1.0, abs(mu)):
        sd = 1.0
    return (y - mu) / sd, mu, sd


def _build(spec, X, y, theta, s2, n2, cfg: FitConfig, restarts=()):
    yt, mu, sd = _standardize(y)
    K = s2 * _correlation(spec.kind, _pairwise_diff(X, X), theta) + n2 * np.eye(X.shape[0])
    L, jitter = _factorize(K, cfg.jitter, cfg.max_jitter)
    alpha = cho_solve((L, True), yt)
    K_inv = cho_solve((L, True), np.eye(X.shape[0]))
    n = X.shape[0]
    lml = float(-0.5 * yt @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * math.log(2 * math.pi))
    arrays = [np.array(a, dtype=float) for a in (theta, X, y, L, alpha, K_inv)]
    for a in arrays:
        a.setflags(write=False)
    theta, X, y, L, alpha, K_inv = arrays
    return GpModel(spec, theta, float(s2), float(n2), float(jitter), mu, sd, X, y, L, alpha, K_inv,
                   lml, tuple(restarts))


def _start_points(d: int, cfg: FitConfig, seed) -> list[np.ndarray]:
    lo = np.log([cfg.theta_bounds[0]] * d + [cfg.signal_bounds[0], cfg.noise_bounds[0]])
    hi = np.log([cfg.theta_bounds[1]] * d + [cfg.signal_bounds[1], cfg.noise_bounds[1]])
    default = np.log([0.3] * d + [1.0, 1e-3])
    starts = [np.clip(default, lo, hi)]
    # random starts are drawn from a central sub-box of the log bounds
    s_lo = np.log([0.05] * d + [0.1, 1e-6])
    s_hi = np.log([2.0] * d + [10.0, 1e-1])
    s_lo, s_hi = np.clip(s_lo, lo, hi), np.clip(s_hi, lo, hi)
    children = np.random.SeedSequence(seed).spawn(max(cfg.restarts - 1, 0))
    for child in children:
        rng = np.random.default_rng(child)
        starts.append(s_lo + rng.random(d + 2) * (s_hi - s_lo))
    return starts


def fit_gp(X, y, spec: KernelSpec | None = None, config: FitConfig | None = None, seed=0) -> GpModel:
    """Fit a GP to ``(X, y)`` with ``X`` in normalized coordinates.

    Duplicate locations are merged by averaging their outputs. Raises
    :class:`GpFitError` if the final covariance cannot be factorized.
    """
    spec = spec or KernelSpec()
    cfg = config or FitConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] < 1 or X.shape[0] != y.shape[0]:
        raise ParameterError(f"need matching non-empty training data, got {X.shape[0]} and {y.shape[0]}")
    X, y = _merge_duplicates(X, y)
    d = X.shape[1]

    if cfg.fixed is not None:
        theta, s2, n2 = cfg.fixed
        theta = np.broadcast_to(np.asarray(theta, dtype=float), (d,)).copy()
        if np.any(theta <= 0) or s2 <= 0 or n2 < 0:
            raise ParameterError("fixed hyperparameters must be positive")
        return _build(spec, X, y, theta, s2, n2, cfg)

    yt = _standardize(y)[0]
    diff = _pairwise_diff(X, X)
    bounds = list(zip(
        np.log([cfg.theta_bounds[0]] * d + [cfg.signal_bounds[0], cfg.noise_bounds[0]]),
        np.log([cfg.theta_bounds[1]] * d + [cfg.signal_bounds[1], cfg.noise_bounds[1]]),
    ))
    results = []
    for idx, p0 in enumerate(_start_points(d, cfg, seed)):
        f0 = _neg_lml(p0, diff, yt, spec.kind, cfg.jitter, want_grad=False)
        res = minimize(_neg_lml, p0, args=(diff, yt, spec.kind, cfg.jitter), jac=True,
                       method="L-BFGS-B", bounds=bounds, options={"maxiter": cfg.maxiter})
        p, f = (res.x, float(res.fun)) if res.fun <= f0 else (p0, f0)
        results.append((f, idx, p, RestartInfo(idx, -f0, -f)))
    results.sort(key=lambda r: (r[0], r[1]))
    best = results[0][2]
    theta, s2, n2 = _unpack(best, d)
    infos = tuple(r[3] for r in sorted(results, key=lambda r: r[1]))
    return _build(spec, X, y, theta, s2, n2, cfg, infos)
