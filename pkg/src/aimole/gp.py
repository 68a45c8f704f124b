"""Single-output GP regression with a squared-exponential ARD kernel.

The kernel has no signal-variance factor: ``k(v, v) == 1``. Hyperparameters
are the per-dimension length scales and the observation noise variance,
optimized in log space by maximizing the log evidence.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from ._accel import kernels
from .errors import ConditioningError, PreconditionError, StructuralError

log = logging.getLogger(__name__)

NOISE_FLOOR = 1e-10
JITTER_LEVELS = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class KernelHyperparameters:
    length_scales: np.ndarray
    noise_variance: float

    def __post_init__(self):
        ls = np.array(self.length_scales, dtype=float).reshape(-1)
        if ls.size == 0 or not np.all(ls > 0) or not np.all(np.isfinite(ls)):
            raise PreconditionError("length scales must be finite and strictly positive")
        if not (self.noise_variance >= 0 and np.isfinite(self.noise_variance)):
            raise PreconditionError("noise variance must be finite and non-negative")
        ls.flags.writeable = False
        object.__setattr__(self, "length_scales", ls)
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    @property
    def dim(self):
        return self.length_scales.size

    def to_log(self):
        return np.append(np.log(self.length_scales), np.log(max(self.noise_variance, NOISE_FLOOR)))

    @classmethod
    def from_log(cls, theta):
        theta = np.asarray(theta, dtype=float)
        return cls(np.exp(theta[:-1]), float(np.exp(theta[-1])))

    def __eq__(self, other):
        if not isinstance(other, KernelHyperparameters):
            return NotImplemented
        return (np.array_equal(self.length_scales, other.length_scales)
                and self.noise_variance == other.noise_variance)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class TrainingSet:
    regressors: np.ndarray
    observations: np.ndarray

    def __post_init__(self):
        x = np.array(self.regressors, dtype=float)
        z = np.array(self.observations, dtype=float).reshape(-1)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if z.size != 1 else x.reshape(1, -1)
        if x.ndim != 2 or x.shape[0] != z.size:
            raise StructuralError(
                f"{x.shape[0] if x.ndim else 0} regressors vs {z.size} observations"
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
            raise StructuralError("training data must be finite")
        x.flags.writeable = False
        z.flags.writeable = False
        object.__setattr__(self, "regressors", x)
        object.__setattr__(self, "observations", z)

    @property
    def count(self):
        return self.observations.size

    @property
    def dim(self):
        return self.regressors.shape[1]


@dataclass(frozen=True, eq=False)
class GaussianProcess:
    """A fitted GP. ``y_mean``/``y_scale`` undo observation standardization."""

    training_set: TrainingSet
    hyper: KernelHyperparameters
    chol: np.ndarray
    weights: np.ndarray
    jitter: float = 0.0
    y_mean: float = 0.0
    y_scale: float = 1.0

    @property
    def inv_length_scales(self):
        return 1.0 / self.hyper.length_scales


@dataclass
class HyperOptResult:
    """Outcome of `optimize_hyperparameters`.

    ``improved`` is False when no restart beat its own starting point, in
    which case ``hyper`` is the best initial guess.
    """

    hyper: KernelHyperparameters
    log_evidence: float
    improved: bool
    initial_evidences: list = field(default_factory=list)
    final_evidences: list = field(default_factory=list)


def _check_dim(v, hyper):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != hyper.dim:
        raise StructuralError(f"vector has {v.size} components, kernel expects {hyper.dim}")
    return v


def se_kernel(v, v_prime, hyper):
    """``exp(-0.5 * sum(((v - v') / l)**2))``."""
    v = _check_dim(v, hyper)
    w = _check_dim(v_prime, hyper)
    z = (v - w) / hyper.length_scales
    return float(np.exp(-0.5 * z @ z))


def gram_matrix(x1, x2, hyper):
    x1 = np.ascontiguousarray(x1, dtype=float)
    x2 = np.ascontiguousarray(x2, dtype=float)
    if x1.shape[1] != hyper.dim or x2.shape[1] != hyper.dim:
        raise StructuralError("regressor dimension does not match the length scales")
    return kernels.se_gram(x1, x2, 1.0 / hyper.length_scales)


def _cholesky(k, noise):
    """Lower Cholesky factor of ``k + (noise + jitter) I`` with jitter escalation."""
    eye = np.eye(k.shape[0])
    for jitter in JITTER_LEVELS:
        try:
            return linalg.cholesky(k + (noise + jitter) * eye, lower=True, check_finite=False), jitter
        except linalg.LinAlgError:
            continue
    raise ConditioningError(
        "kernel matrix is not positive definite after jitter levels "
        + ", ".join(f"{j:g}" for j in JITTER_LEVELS)
    )


def _cho_inverse(chol):
    inv, info = linalg.lapack.dpotri(chol, lower=1)
    if info != 0:
        raise ConditioningError(f"dpotri failed with info={info}")
    lower = np.tril(inv)
    return lower + np.tril(lower, -1).T


def standardize(data):
    """Zero-mean, unit-variance copy of ``data`` plus the applied (mean, scale)."""
    z = data.observations
    mean = float(z.mean())
    scale = float(z.std())
    if not scale > 0:
        scale = 1.0
    return TrainingSet(data.regressors, (z - mean) / scale), mean, scale


def log_marginal_likelihood(hyper, data):
    """Log evidence and its gradient with respect to ``hyper.to_log()``.

    Returns
    -------
    value : float
    gradient : ndarray, shape (V + 1,)
        Derivatives w.r.t. log length scales, then log noise variance.
    """
    if data.count < 1:
        raise PreconditionError("log evidence needs at least one observation")
    if data.dim != hyper.dim:
        raise StructuralError("regressor dimension does not match the length scales")
    x = np.ascontiguousarray(data.regressors)
    z = data.observations
    inv_ls = 1.0 / hyper.length_scales
    k = kernels.se_gram(x, x, inv_ls)
    chol, _ = _cholesky(k, hyper.noise_variance)
    alpha = linalg.cho_solve((chol, True), z, check_finite=False)
    t = z.size
    value = -0.5 * z @ alpha - np.log(np.diag(chol)).sum() - 0.5 * t * _LOG_2PI

    k_inv = _cho_inverse(chol)
    q = np.outer(alpha, alpha) - k_inv
    grad = np.empty(hyper.dim + 1)
    grad[:-1] = kernels.lml_length_scale_grad(q, k, x, inv_ls)
    grad[-1] = 0.5 * np.trace(q) * hyper.noise_variance
    return float(value), grad


def fit(data, hyper, standardize_observations=False):
    """Factorize the kernel matrix and precompute prediction weights."""
    if data.count < 1:
        raise PreconditionError("cannot fit a GP without data")
    y_mean, y_scale = 0.0, 1.0
    if standardize_observations:
        data, y_mean, y_scale = standardize(data)
    k = gram_matrix(data.regressors, data.regressors, hyper)
    chol, jitter = _cholesky(k, hyper.noise_variance)
    if jitter > 0:
        log.debug("fit needed jitter %g (T=%d)", jitter, data.count)
    weights = linalg.cho_solve((chol, True), data.observations, check_finite=False)
    return GaussianProcess(data, hyper, chol, weights, jitter, y_mean, y_scale)


def predict_mean(gp, v):
    v = _check_dim(v, gp.hyper)
    mu, _ = kernels.gp_mean_grad(gp.training_set.regressors, gp.inv_length_scales, gp.weights, v)
    return gp.y_mean + gp.y_scale * float(mu)


def predict_mean_gradient(gp, v):
    v = _check_dim(v, gp.hyper)
    _, grad = kernels.gp_mean_grad(gp.training_set.regressors, gp.inv_length_scales, gp.weights, v)
    return gp.y_scale * np.asarray(grad)


def predict_means(gp, points):
    """Posterior mean at each row of ``points``."""
    k = gram_matrix(np.atleast_2d(points), gp.training_set.regressors, gp.hyper)
    return gp.y_mean + gp.y_scale * (k @ gp.weights)


def _negative_objective(theta, data):
    try:
        value, grad = log_marginal_likelihood(KernelHyperparameters.from_log(theta), data)
    except ConditioningError:
        return 1e25, np.zeros_like(theta)
    if not np.isfinite(value):
        return 1e25, np.zeros_like(theta)
    return -value, -grad


def _safe_evidence(hyper, data):
    try:
        return log_marginal_likelihood(hyper, data)[0]
    except ConditioningError:
        return -np.inf


def optimize_hyperparameters(data, num_restarts=5, seed=0, standardize_observations=False,
                             max_iter=200):
    """Evidence maximization with random restarts.

    Initial length scales are drawn log-uniformly in [0.1, 10] times the
    per-dimension regressor spread; the initial noise variance is 1e-4 times
    the observation variance. L-BFGS-B runs in log space with analytic
    gradients; its relative tolerance of 1e-7 is far below any evidence
    difference that changes the fitted model.
    """
    if data.count < 2:
        raise PreconditionError("hyperparameter optimization needs at least two observations")
    if num_restarts < 1:
        raise PreconditionError("num_restarts must be positive")
    if standardize_observations:
        data, _, _ = standardize(data)
    rng = np.random.default_rng(seed)
    spread = data.regressors.std(axis=0)
    spread = np.where(spread > 0, spread, 1.0)
    z_var = float(data.observations.var())
    noise0 = max(1e-4 * (z_var if z_var > 0 else 1.0), NOISE_FLOOR)
    bounds = [(np.log(1e-3 * s), np.log(1e4 * s)) for s in spread]
    bounds.append((np.log(NOISE_FLOOR), np.log(max(10.0 * z_var, 1.0))))

    best = None
    initial_evs, final_evs = [], []
    improved = False
    for _ in range(num_restarts):
        ls0 = spread * 10.0 ** rng.uniform(-1.0, 1.0, size=spread.size)
        h0 = KernelHyperparameters(ls0, noise0)
        ev0 = _safe_evidence(h0, data)
        initial_evs.append(ev0)
        candidate, ev = h0, ev0
        res = optimize.minimize(_negative_objective, h0.to_log(), args=(data,), jac=True,
                                method="L-BFGS-B", bounds=bounds,
                                options={"maxiter": max_iter, "ftol": 1e-7, "gtol": 1e-4})
        h1 = KernelHyperparameters.from_log(res.x)
        h1 = KernelHyperparameters(h1.length_scales, max(h1.noise_variance, NOISE_FLOOR))
        ev1 = _safe_evidence(h1, data)
        if ev1 > ev0:
            candidate, ev = h1, ev1
            improved = True
        final_evs.append(ev)
        if best is None or ev > best[1]:
            best = (candidate, ev)
    if not improved:
        log.warning("evidence optimization did not improve on any initialization")
    return HyperOptResult(best[0], float(best[1]), improved, initial_evs, final_evs)
