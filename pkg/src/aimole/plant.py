"""Two-link horizontal-plane SCARA simulator.

The learning code never looks inside this module; it only calls
`ScaraPlant.run_trial`.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._accel import kernels
from .errors import DivergenceError, NumericError, StructuralError
from .trajectories import LiftedTrajectory, interleave

STATE_DIM = 4
INPUT_DIM = 2
OUTPUT_DIM = 2
OUTPUT_MATRIX = np.hstack([np.eye(2), np.zeros((2, 2))])


@dataclass(frozen=True)
class PlantParameters:
    """Mechanical parameters. Defaults describe a desk-scale arm of two uniform 0.3 m rods."""

    link_length_1: float = 0.3
    link_length_2: float = 0.3
    mass_1: float = 1.0
    mass_2: float = 1.0
    inertia_1: float = 1.0 * 0.3**2 / 12
    inertia_2: float = 1.0 * 0.3**2 / 12
    com_1: float = 0.15
    com_2: float = 0.15
    damping_1: float = 0.05
    damping_2: float = 0.05
    torque_limit: float = 5.0

    def __post_init__(self):
        positive = ("link_length_1", "link_length_2", "mass_1", "mass_2",
                    "inertia_1", "inertia_2", "torque_limit")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.damping_1 < 0 or self.damping_2 < 0:
            raise ValueError("damping must be non-negative")
        if not (0 < self.com_1 <= self.link_length_1 and 0 < self.com_2 <= self.link_length_2):
            raise ValueError("centre-of-mass distances must lie in (0, link_length]")

    def as_vector(self):
        return np.array([
            self.link_length_1, self.link_length_2, self.mass_1, self.mass_2,
            self.inertia_1, self.inertia_2, self.com_1, self.com_2,
            self.damping_1, self.damping_2, self.torque_limit,
        ])

    def undamped(self):
        return replace(self, damping_1=0.0, damping_2=0.0)


def inertia_matrix(q, params):
    """Joint-space mass matrix M(q)."""
    p = params
    cb = np.cos(q[1])
    m11 = (p.inertia_1 + p.inertia_2 + p.mass_1 * p.com_1**2
           + p.mass_2 * (p.link_length_1**2 + p.com_2**2 + 2 * p.link_length_1 * p.com_2 * cb))
    m12 = p.inertia_2 + p.mass_2 * (p.com_2**2 + p.link_length_1 * p.com_2 * cb)
    m22 = p.inertia_2 + p.mass_2 * p.com_2**2
    return np.array([[m11, m12], [m12, m22]])


def coriolis_matrix(q, qd, params):
    """Coriolis/centrifugal matrix C(q, qd) built from Christoffel symbols."""
    h = params.mass_2 * params.link_length_1 * params.com_2 * np.sin(q[1])
    return np.array([[-h * qd[1], -h * (qd[0] + qd[1])], [h * qd[0], 0.0]])


def kinetic_energy(state, params):
    qd = np.asarray(state[2:4], dtype=float)
    return 0.5 * qd @ inertia_matrix(state[:2], params) @ qd


def dynamics_rhs(state, torque, params):
    """Time derivative ``[a_dot, b_dot, a_ddot, b_ddot]`` for already-saturated torques."""
    x = np.asarray(state, dtype=float)
    u = np.asarray(torque, dtype=float)
    if x.shape != (4,) or u.shape != (2,):
        raise StructuralError("state must have 4 and torque 2 components")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
        raise NumericError("non-finite state or torque")
    return kernels.scara_rhs(x, u, params.as_vector())


def output_map(state):
    """Joint angles (alpha, beta)."""
    return np.asarray(state, dtype=float)[:2].copy()


def simulate_trial(inputs, x0, params, substeps=4, bound=1e3):
    """Integrate one trial with RK4 and zero-order-hold torques.

    Parameters
    ----------
    inputs : LiftedTrajectory
        Motor torques, two per sample.
    x0 : array_like
        State at sample 1.
    params : PlantParameters
    substeps : int
        RK4 steps per sample period.
    bound : float
        Any state component exceeding this magnitude aborts the trial.

    Returns
    -------
    states, output : LiftedTrajectory
    """
    if inputs.dim_per_sample != INPUT_DIM:
        raise StructuralError(f"expected {INPUT_DIM} inputs per sample, got {inputs.dim_per_sample}")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (STATE_DIM,) or not np.all(np.isfinite(x0)):
        raise NumericError("initial state must be a finite 4-vector")
    if not np.all(np.isfinite(inputs.data)):
        raise NumericError("non-finite torque input")
    states, fail = kernels.rk4_simulate(
        np.ascontiguousarray(inputs.samples()), x0, params.as_vector(),
        float(inputs.sample_period), int(substeps), float(bound),
    )
    if fail >= 0:
        raise DivergenceError(f"simulation diverged at sample {fail + 1}", fail + 1)
    dt = inputs.sample_period
    return interleave(states, dt), interleave(states[:, :2], dt)


class ScaraPlant:
    """Trial-executing wrapper around `simulate_trial`.

    Optional zero-mean Gaussian noise with standard deviation ``noise_std`` is
    added to measured states and outputs; the noise stream is seeded per trial
    so repeated runs are reproducible.
    """

    state_dim = STATE_DIM
    input_dim = INPUT_DIM
    output_dim = OUTPUT_DIM

    def __init__(self, params=None, num_samples=200, sample_period=0.02,
                 initial_state=(0.0, np.pi / 6, 0.0, 0.0), noise_std=0.0,
                 noise_seed=0, substeps=4, bound=1e3):
        self.params = params or PlantParameters()
        self.num_samples = int(num_samples)
        self.sample_period = float(sample_period)
        self.initial_state = np.asarray(initial_state, dtype=float)
        self.output_matrix = OUTPUT_MATRIX.copy()
        self.noise_std = float(noise_std)
        self.noise_seed = noise_seed
        self.substeps = substeps
        self.bound = bound
        self.trials_run = 0

    @property
    def noise_level(self):
        return self.noise_std

    def run_trial(self, inputs, trial_index):
        if inputs.num_samples != self.num_samples or inputs.sample_period != self.sample_period:
            raise StructuralError("input horizon or sample period does not match the plant")
        states, output = simulate_trial(inputs, self.initial_state, self.params,
                                        self.substeps, self.bound)
        self.trials_run += 1
        if self.noise_std > 0:
            rng = np.random.default_rng([self.noise_seed, self.trials_run])
            states = states.with_data(states.data + self.noise_std * rng.standard_normal(states.data.size))
            output = interleave(states.samples()[:, :2], self.sample_period)
        return states, output
