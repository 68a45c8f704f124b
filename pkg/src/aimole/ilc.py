"""Norm-optimal ILC driven by a GP dynamics model, with self-selected parameters."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np
from scipy import linalg

from .dynamics import TrialWindow, rollout_jacobian, train_model
from .errors import (AimoleError, CalibrationError, ConditioningError,
                     DegenerateWeightsError, PreconditionError, StructuralError)
from .trajectories import (LiftedTrajectory, TrialRecord, interleave,
                           normalized_error_norm, tracking_error)

log = logging.getLogger(__name__)

CALIBRATION_START = 0.01**2
EXCITATION_FLOOR = 1e-3
MAX_DOUBLINGS = 20


class Plant(Protocol):
    num_samples: int
    sample_period: float
    input_dim: int
    initial_state: np.ndarray
    output_matrix: np.ndarray

    def run_trial(self, inputs: LiftedTrajectory, trial_index: int) -> tuple: ...


@dataclass(frozen=True)
class LearningConfig:
    window_size: int = 3
    max_trials: int = 15
    input_variance: Optional[float] = None
    spectral_threshold: float = 0.01
    stop_threshold: float = 0.01
    num_restarts: int = 5
    block_norm: str = "mean_singular"
    seed: int = 0

    def __post_init__(self):
        if self.window_size < 1 or self.max_trials < 1:
            raise PreconditionError("window_size and max_trials must be at least 1")
        if self.input_variance is not None and self.input_variance < 0:
            raise PreconditionError("input variance must be non-negative")
        if not 0 < self.spectral_threshold < 1:
            raise PreconditionError("spectral threshold must lie in (0, 1)")
        if self.num_restarts < 1:
            raise PreconditionError("num_restarts must be positive")
        if self.block_norm not in ("mean_singular", "spectral"):
            raise PreconditionError(f"unknown block norm {self.block_norm!r}")


@dataclass(frozen=True, eq=False)
class WeightPair:
    W: np.ndarray
    S: np.ndarray
    w_bar: np.ndarray
    s_bar: np.ndarray


@dataclass
class LearningHistory:
    reference: LiftedTrajectory
    config: LearningConfig
    records: list = field(default_factory=list)
    epsilons: list = field(default_factory=list)
    cutoff_frequency: float = float("nan")
    input_variance: float = float("nan")
    stop_reason: str = ""

    @property
    def num_trials(self):
        return len(self.records)

    def config_dict(self):
        return asdict(self.config)


# -- autonomous parameterization ------------------------------------------------

def spectral_cutoff(reference, threshold=0.01):
    """Largest significant frequency of ``reference`` and whether the fallback was used.

    Each output channel has the straight line through its end points and
    then its mean removed before the amplitude spectrum is taken, so a
    point-to-point move does not leak across the whole band.
    """
    n, dt = reference.num_samples, reference.sample_period
    if n < 8:
        raise PreconditionError("cutoff detection needs at least 8 samples")
    freqs = np.fft.rfftfreq(n, dt)
    ramp = np.arange(n) / (n - 1)
    top = -1
    for d in range(1, reference.dim_per_sample + 1):
        x = reference.block(d)
        x = x - (x[0] + (x[-1] - x[0]) * ramp)
        x = x - x.mean()
        amp = np.abs(np.fft.rfft(x))
        amp[0] = 0.0
        peak = amp.max()
        if peak <= 1e-12 * max(1.0, np.abs(reference.block(d)).max()) * n:
            continue
        top = max(top, int(np.nonzero(amp > threshold * peak)[0].max()))
    if top < 0:
        return 5.0 / (n * dt), True
    return float(freqs[top]), False


def detect_cutoff_frequency(reference, threshold=0.01):
    f0, fallback = spectral_cutoff(reference, threshold)
    if fallback:
        log.warning("reference has no significant spectral content; using f0 = %g Hz", f0)
    return f0


def lowpass_spectrum(noise, dt, cutoff):
    """Real FFT of ``noise`` (per column) with every bin strictly above ``cutoff`` zeroed."""
    spec = np.fft.rfft(noise, axis=0)
    spec[np.fft.rfftfreq(noise.shape[0], dt) > cutoff] = 0.0
    return spec


def generate_initial_input(input_dim, num_samples, dt, cutoff, variance, seed):
    """Gaussian white noise per input channel, brick-wall low-passed at ``cutoff``."""
    if variance < 0:
        raise PreconditionError("input variance must be non-negative")
    rng = np.random.default_rng(seed)
    noise = np.sqrt(variance) * rng.standard_normal((num_samples, input_dim))
    smooth = np.fft.irfft(lowpass_spectrum(noise, dt, cutoff), n=num_samples, axis=0)
    return interleave(smooth, dt)


def calibrate_input_variance(plant, input_dim, num_samples, dt, cutoff, noise_level, seed,
                             start=CALIBRATION_START, floor=EXCITATION_FLOOR,
                             max_doublings=MAX_DOUBLINGS):
    """Double the input variance until a trial visibly moves the output.

    A candidate is accepted when the peak deviation of any output from its
    first sample exceeds ``max(10 * noise_level, floor)``. Calibration trials
    are run with trial index 0.
    """
    if noise_level < 0:
        raise PreconditionError("noise level must be non-negative")
    needed = max(10.0 * noise_level, floor)
    variance = start
    for k in range(max_doublings + 1):
        u = generate_initial_input(input_dim, num_samples, dt, cutoff, variance,
                                   np.random.SeedSequence([seed, k]))
        _, y = plant.run_trial(u, 0)
        ys = y.samples()
        excursion = float(np.max(np.abs(ys - ys[0])))
        log.debug("calibration: variance %g -> excursion %g (need %g)", variance, excursion, needed)
        if excursion > needed:
            return variance
        variance *= 2.0
    raise CalibrationError(
        f"output excursion stayed below {needed:g} after {max_doublings} doublings "
        f"(final variance {variance / 2:g})"
    )


def block_norm(a, kind="mean_singular"):
    """Matrix norm used for the weight blocks.

    ``"mean_singular"`` is the nuclear norm divided by ``min(a.shape)``, i.e.
    the average singular value; ``"spectral"`` is the largest singular value.
    """
    if kind == "spectral":
        return float(np.linalg.norm(a, 2))
    if kind == "mean_singular":
        return float(np.linalg.svd(a, compute_uv=False).sum() / min(a.shape))
    raise ValueError(f"unknown block norm {kind!r}")


def compute_weights(p, out_dim, in_dim, num_samples, norm="mean_singular"):
    """Kronecker-structured weights from norms of the input/output blocks of ``p``.

    The output weight of channel o is the inverse norm of all blocks feeding
    output o; the input weight of channel r is the norm of all blocks driven
    by input r. With the spectral norm the largest-gain direction of the
    normalized plant is only halved per trial and weak directions hardly
    learn, hence the average singular value as default.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (out_dim * num_samples, in_dim * num_samples):
        raise StructuralError(f"P has shape {p.shape}, expected "
                              f"{(out_dim * num_samples, in_dim * num_samples)}")
    if not np.all(np.isfinite(p)):
        raise PreconditionError("P must be finite")
    rows = np.array([block_norm(p[o::out_dim, :], norm) for o in range(out_dim)])
    cols = np.array([block_norm(p[:, r::in_dim], norm) for r in range(in_dim)])
    if np.any(rows == 0) or np.any(cols == 0):
        raise DegenerateWeightsError(
            "zero block norm: outputs %s / inputs %s are disconnected in the model"
            % (list(np.nonzero(rows == 0)[0] + 1), list(np.nonzero(cols == 0)[0] + 1))
        )
    w_bar = np.diag(1.0 / rows)
    s_bar = np.diag(cols)
    eye = np.eye(num_samples)
    return WeightPair(np.kron(eye, w_bar), np.kron(eye, s_bar), w_bar, s_bar)


def norm_optimal_step(p, w, s, e):
    """Minimizer of ``|e - P du|_W^2 + |du|_S^2``."""
    pw = p.T @ w
    lhs = pw @ p + s
    try:
        factor = linalg.cho_factor(lhs, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise ConditioningError(f"P'WP + S is not positive definite: {exc}") from exc
    return linalg.cho_solve(factor, pw @ e)


def norm_optimal_update(p, w, s, u, e):
    """Next input trajectory ``u + du`` of the norm-optimal update with weights ``w``, ``s``."""
    p = np.asarray(p, dtype=float)
    if p.shape != (e.data.size, u.data.size):
        raise StructuralError(f"P has shape {p.shape}, expected {(e.data.size, u.data.size)}")
    du = norm_optimal_step(p, w, s, e.data)
    return u.with_data(u.data + du)


# -- learning loop --------------------------------------------------------------

def _fold_seed(seed, trial):
    return int(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, trial]).generate_state(1)[0])


def _record(plant, inputs, trial, reference):
    states, output = plant.run_trial(inputs, trial)
    return TrialRecord(trial, inputs, states, output, tracking_error(reference, output))


def run_learning(plant, reference, config=LearningConfig(),
                 on_trial: Optional[Callable] = None):
    """Learn a feedforward input that makes ``plant`` track ``reference``.

    Parameters
    ----------
    plant : Plant
        Anything with ``run_trial(inputs, trial_index) -> (states, output)``
        plus ``num_samples``, ``sample_period``, ``input_dim``,
        ``initial_state`` and ``output_matrix``.
    reference : LiftedTrajectory
    config : LearningConfig
    on_trial : callable, optional
        Called as ``on_trial(record, epsilon)`` after every trial.

    Returns
    -------
    LearningHistory

    Any `AimoleError` raised mid-run carries ``trial_index`` and the partial
    ``history`` as attributes.
    """
    n, dt = reference.num_samples, reference.sample_period
    if plant.num_samples != n or plant.sample_period != dt:
        raise StructuralError("plant horizon/sample period do not match the reference")
    in_dim = plant.input_dim
    history = LearningHistory(reference, config)
    trial = 0
    try:
        f0 = detect_cutoff_frequency(reference, config.spectral_threshold)
        history.cutoff_frequency = f0
        variance = config.input_variance
        if variance is None:
            variance = calibrate_input_variance(plant, in_dim, n, dt, f0,
                                                getattr(plant, "noise_level", 0.0), config.seed)
        history.input_variance = variance
        log.info("f0 = %.4g Hz, input variance = %.4g", f0, variance)

        trial = 1
        u = generate_initial_input(in_dim, n, dt, f0, variance, config.seed)
        first = _record(plant, u, trial, reference)
        window = TrialWindow(config.window_size, [first])
        history.records.append(first)
        history.epsilons.append(normalized_error_norm(reference, first.output, first.output))
        if on_trial:
            on_trial(first, 1.0)

        history.stop_reason = "max_trials"
        while trial < config.max_trials:
            model = train_model(window, _fold_seed(config.seed, trial),
                                initial_state=plant.initial_state,
                                output_matrix=plant.output_matrix,
                                num_restarts=config.num_restarts)
            latest = window.records[-1]
            p = rollout_jacobian(model, latest.input)
            weights = compute_weights(p, reference.dim_per_sample, in_dim, n, config.block_norm)
            u = norm_optimal_update(p, weights.W, weights.S, latest.input, latest.error)
            trial += 1
            rec = _record(plant, u, trial, reference)
            window.append(rec)
            eps = normalized_error_norm(reference, rec.output, first.output)
            history.records.append(rec)
            history.epsilons.append(eps)
            log.info("trial %d: epsilon = %.4g", trial, eps)
            if on_trial:
                on_trial(rec, eps)
            if eps < config.stop_threshold:
                history.stop_reason = "threshold"
                break
    except AimoleError as exc:
        exc.trial_index = trial
        exc.history = history
        history.stop_reason = f"error: {exc}"
        raise
    return history
