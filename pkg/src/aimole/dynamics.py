"""State-space dynamics model built from one GP per state variable.

Each GP maps the regressor ``[x(n), u(n)]`` to one component of ``x(n+1)``.
Roll-outs chain the posterior means over the horizon; the roll-out Jacobian
is the exact derivative of that chain.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import gp as gpr
from ._accel import kernels
from .errors import DivergenceError, PreconditionError, StructuralError
from .trajectories import LiftedTrajectory, interleave


class TrialWindow:
    """The most recent ``window_size`` trial records, oldest first."""

    def __init__(self, window_size=3, records=()):
        if window_size < 1:
            raise PreconditionError("window size must be at least 1")
        self.window_size = int(window_size)
        self._records = deque(maxlen=self.window_size)
        for rec in records:
            self.append(rec)

    def append(self, record):
        self._records.append(record)

    @property
    def records(self):
        return list(self._records)

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(self._records)


def _records(window):
    return window.records if isinstance(window, TrialWindow) else list(window)


def assemble_training_data(window):
    """One `TrainingSet` per state variable from all transitions in the window."""
    records = _records(window)
    if not records:
        raise PreconditionError("training window is empty")
    first = records[0]
    shape = (first.states.dim_per_sample, first.input.dim_per_sample,
             first.input.num_samples, first.input.sample_period)
    regs, targets = [], []
    for rec in records:
        if (rec.states.dim_per_sample, rec.input.dim_per_sample,
                rec.input.num_samples, rec.input.sample_period) != shape:
            raise StructuralError(f"trial {rec.trial_index} does not match the window's dimensions")
        x = rec.states.samples()
        u = rec.input.samples()
        regs.append(np.hstack([x[:-1], u[:-1]]))
        targets.append(x[1:])
    regressors = np.vstack(regs)
    targets = np.vstack(targets)
    return [gpr.TrainingSet(regressors, targets[:, m]) for m in range(shape[0])]


@dataclass(frozen=True, eq=False)
class DynamicsModel:
    state_gps: tuple
    state_dim: int
    input_dim: int
    output_matrix: np.ndarray
    initial_state: np.ndarray
    horizon: int
    sample_period: float

    def __post_init__(self):
        if len(self.state_gps) != self.state_dim:
            raise StructuralError("need exactly one GP per state variable")
        for g in self.state_gps:
            if g.hyper.dim != self.state_dim + self.input_dim:
                raise StructuralError("GP regressor dimension must equal M + R")
        c = np.atleast_2d(np.asarray(self.output_matrix, dtype=float))
        if c.shape[1] != self.state_dim:
            raise StructuralError("output matrix must have M columns")
        object.__setattr__(self, "output_matrix", c)
        object.__setattr__(self, "initial_state", np.asarray(self.initial_state, dtype=float))
        x_train = self.state_gps[0].training_set.regressors
        packed = dict(
            x_train=np.ascontiguousarray(x_train),
            inv_ls=np.vstack([g.inv_length_scales for g in self.state_gps]),
            weights=np.vstack([g.weights for g in self.state_gps]),
            y_mean=np.array([g.y_mean for g in self.state_gps]),
            y_scale=np.array([g.y_scale for g in self.state_gps]),
        )
        shared = all(np.array_equal(g.training_set.regressors, x_train) for g in self.state_gps)
        object.__setattr__(self, "_packed", packed if shared else None)

    @property
    def output_dim(self):
        return self.output_matrix.shape[0]

    @property
    def hyperparameters(self):
        return [g.hyper for g in self.state_gps]


def train_model(window, seed, initial_state=None, output_matrix=None, num_restarts=5,
                max_iter=200):
    """Fit one GP per state variable on the window's transitions.

    Hyperparameters are optimized from scratch for each state variable, with
    the seed for variable ``m`` derived from ``(seed, m)``.
    """
    records = _records(window)
    sets = assemble_training_data(records)
    # sorted rows make the model independent of trial order in the window
    order = np.lexsort(np.column_stack([sets[0].regressors] + [s.observations for s in sets]).T[::-1])
    sets = [gpr.TrainingSet(s.regressors[order], s.observations[order]) for s in sets]
    last = records[-1]
    m_dim = last.states.dim_per_sample
    if initial_state is None:
        initial_state = last.states.samples()[0]
    if output_matrix is None:
        output_matrix = np.eye(last.output.dim_per_sample, m_dim)
    gps = []
    for m, data in enumerate(sets):
        sub_seed = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, m])
        try:
            res = gpr.optimize_hyperparameters(data, num_restarts, sub_seed,
                                               standardize_observations=True,
                                               max_iter=max_iter)
            gps.append(gpr.fit(data, res.hyper, standardize_observations=True))
        except gpr.ConditioningError as exc:
            raise gpr.ConditioningError(f"state variable {m + 1}: {exc}") from exc
    return DynamicsModel(tuple(gps), m_dim, last.input.dim_per_sample, output_matrix,
                         initial_state, last.input.num_samples, last.input.sample_period)


def _check_input(model, inputs):
    if inputs.dim_per_sample != model.input_dim:
        raise StructuralError(f"model expects {model.input_dim} inputs per sample")


def _run(model, inputs, with_sens):
    _check_input(model, inputs)
    u = np.ascontiguousarray(inputs.samples())
    p = model._packed
    if p is not None:
        states, sens, fail = kernels.rollout(p["x_train"], p["inv_ls"], p["weights"], p["y_mean"],
                                             p["y_scale"], model.initial_state, u, with_sens)
    else:
        states, sens, fail = _rollout_generic(model, u, with_sens)
    if fail >= 0:
        raise DivergenceError(f"roll-out produced non-finite state at sample {fail + 1}", fail + 1)
    return states, sens


def _rollout_generic(model, u, with_sens):
    # GPs trained on different regressors; slow path, no kernel packing
    n, r = u.shape
    m = model.state_dim
    states = np.zeros((n, m))
    states[0] = model.initial_state
    sens = np.zeros((n, m, r * n)) if with_sens else np.zeros((0, m, 0))
    for k in range(n - 1):
        v = np.concatenate([states[k], u[k]])
        jac = np.empty((m, m + r))
        for i, g in enumerate(model.state_gps):
            states[k + 1, i] = gpr.predict_mean(g, v)
            jac[i] = gpr.predict_mean_gradient(g, v)
        if not np.all(np.isfinite(states[k + 1])):
            return states, sens, k + 1
        if with_sens:
            sens[k + 1, :, :k * r] = jac[:, :m] @ sens[k, :, :k * r]
            sens[k + 1, :, k * r:(k + 1) * r] = jac[:, m:]
    return states, sens, -1


def rollout_states(model, inputs):
    """Predicted state trajectory (M per sample)."""
    states, _ = _run(model, inputs, False)
    return interleave(states, inputs.sample_period)


def rollout(model, inputs):
    """Predicted output trajectory ``C x_hat(n)`` for the given input trajectory."""
    states, _ = _run(model, inputs, False)
    return interleave(states @ model.output_matrix.T, inputs.sample_period)


def rollout_jacobian(model, inputs):
    """Jacobian of `rollout` w.r.t. the lifted input, shape ``(O*N, R*N)``.

    Built by carrying the state sensitivity forward in time, so output
    sample ``n`` only depends on inputs at samples before ``n``.
    """
    _, sens = _run(model, inputs, True)
    n = inputs.num_samples
    # (N, O, RN) -> (O*N, RN) in sample-major row order
    return np.einsum("om,nmc->noc", model.output_matrix, sens).reshape(model.output_dim * n, -1)
