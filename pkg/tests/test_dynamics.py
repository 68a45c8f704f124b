import numpy as np
import pytest

from aimole import gp as gpr
from aimole.dynamics import (TrialWindow, assemble_training_data, rollout, rollout_jacobian,
                             rollout_states, train_model)
from aimole.errors import PreconditionError
from aimole.ilc import generate_initial_input
from aimole.plant import OUTPUT_MATRIX, ScaraPlant
from aimole.trajectories import TrialRecord, interleave

A = np.array([[0.9, 0.1], [-0.1, 0.8]])
B = np.array([[0.5, 0.0], [0.1, 0.3]])


def linear_record(rng, n, j, dt=0.1):
    u = rng.standard_normal((n, 2))
    x = [np.zeros(2)]
    for k in range(n - 1):
        x.append(A @ x[-1] + B @ u[k])
    x = np.array(x)
    traj = interleave(x, dt)
    return TrialRecord(j, interleave(u, dt), traj, traj, traj)


def lifted_lti(n, c=np.eye(2)):
    p = np.zeros((2 * n, 2 * n))
    for i in range(n):
        for k in range(i):
            p[2 * i:2 * i + 2, 2 * k:2 * k + 2] = c @ np.linalg.matrix_power(A, i - 1 - k) @ B
    return p


@pytest.fixture(scope="module")
def linear_model():
    rng = np.random.default_rng(0)
    recs = [linear_record(rng, 30, j) for j in (1, 2, 3)]
    return train_model(recs, 0, np.zeros(2), np.eye(2)), recs


def scara_records(n=60, trials=3, seed=0, cutoff=2.0, variance=0.3**2):
    plant = ScaraPlant(num_samples=n)
    recs = []
    for j in range(1, trials + 1):
        u = generate_initial_input(2, n, 0.02, cutoff, variance, seed + j)
        states, out = plant.run_trial(u, j)
        recs.append(TrialRecord(j, u, states, out, out))
    return plant, recs


def random_scara_model(seed, n=10):
    # short horizons have coarse FFT bins: white excitation keeps the data informative
    plant, recs = scara_records(n=n, trials=3, seed=seed, cutoff=25.0, variance=0.25)
    model = train_model(recs, seed, plant.initial_state, OUTPUT_MATRIX, num_restarts=2)
    return model, recs


def fd_jacobian(model, u, h=1e-6):
    cols = []
    for c in range(u.data.size):
        d = np.zeros(u.data.size)
        d[c] = h
        cols.append((rollout(model, u.with_data(u.data + d)).data
                     - rollout(model, u.with_data(u.data - d)).data) / (2 * h))
    return np.column_stack(cols)


def test_assemble_counts_and_layout():
    rng = np.random.default_rng(1)
    one = linear_record(rng, 3, 1)
    sets = assemble_training_data(TrialWindow(3, [one]))
    assert len(sets) == 2 and all(s.count == 2 for s in sets)
    x, u = one.states.samples(), one.input.samples()
    assert np.array_equal(sets[0].regressors[0], np.concatenate([x[0], u[0]]))
    assert sets[1].observations[0] == x[1, 1]
    recs = [linear_record(rng, 200, j) for j in (1, 2, 3)]
    assert all(s.count == 597 for s in assemble_training_data(recs))


def test_assemble_empty_window():
    with pytest.raises(PreconditionError):
        assemble_training_data(TrialWindow(3))


def test_window_evicts_oldest():
    rng = np.random.default_rng(2)
    win = TrialWindow(3)
    for j in range(1, 6):
        win.append(linear_record(rng, 4, j))
    assert [r.trial_index for r in win] == [3, 4, 5]
    with pytest.raises(PreconditionError):
        TrialWindow(0)


def test_linear_plant_rollout_reproduces_states(linear_model):
    model, recs = linear_model
    for rec in recs:
        pred = rollout_states(model, rec.input).data
        assert np.max(np.abs(pred - rec.states.data)) <= 0.01 * np.max(np.abs(rec.states.data))


def test_linear_plant_jacobian_matches_lifted_matrix(linear_model):
    model, recs = linear_model
    p = rollout_jacobian(model, recs[-1].input)
    assert np.max(np.abs(p - lifted_lti(30))) < 1e-3


def test_duplicate_trials_match_single_trial():
    rng = np.random.default_rng(3)
    rec = linear_record(rng, 25, 1)
    single = train_model([rec], 4, np.zeros(2), np.eye(2))
    double = train_model([rec, rec], 4, np.zeros(2), np.eye(2))
    scale = np.max(np.abs(rec.states.data))
    assert np.max(np.abs(rollout(single, rec.input).data
                         - rollout(double, rec.input).data)) < 0.01 * scale


def test_duplicated_data_equals_halved_noise():
    rng = np.random.default_rng(3)
    rec = linear_record(rng, 25, 1)
    one = assemble_training_data([rec])[0]
    two = assemble_training_data([rec, rec])[0]
    h = gpr.KernelHyperparameters([2.0, 2.0, 3.0, 3.0], 1e-2)
    half = gpr.KernelHyperparameters(h.length_scales, 5e-3)
    v = rng.standard_normal(4)
    assert gpr.predict_mean(gpr.fit(two, h), v) == pytest.approx(
        gpr.predict_mean(gpr.fit(one, half), v), rel=1e-6, abs=1e-9)


def test_training_is_deterministic_and_order_free():
    rng = np.random.default_rng(4)
    recs = [linear_record(rng, 20, j) for j in (1, 2, 3)]
    a = train_model(recs, 7, np.zeros(2), np.eye(2))
    b = train_model(recs, 7, np.zeros(2), np.eye(2))
    c = train_model(recs[::-1], 7, np.zeros(2), np.eye(2))
    assert a.hyperparameters == b.hyperparameters
    assert a.hyperparameters == c.hyperparameters


def test_rollout_single_sample(linear_model):
    model, _ = linear_model
    rng = np.random.default_rng(5)
    import dataclasses
    short = dataclasses.replace(model, horizon=1)
    u = interleave(rng.standard_normal((1, 2)), 0.1)
    assert np.array_equal(rollout(short, u).data, model.output_matrix @ model.initial_state)


def test_far_input_reverts_to_prior_mean(linear_model):
    model, _ = linear_model
    u = interleave(np.full((6, 2), 1e3), 0.1)
    states = rollout_states(model, u).samples()
    means = np.array([g.y_mean for g in model.state_gps])
    np.testing.assert_allclose(states[2:], np.tile(means, (4, 1)), atol=1e-8)


def test_scara_replay_matches_simulator():
    plant, recs = scara_records(n=60, trials=3)
    model = train_model(recs, 1, plant.initial_state, OUTPUT_MATRIX)
    for rec in recs:
        assert np.max(np.abs(rollout(model, rec.input).data - rec.output.data)) < 0.01


def test_jacobian_is_strictly_causal():
    model, recs = random_scara_model(10, n=10)
    p = rollout_jacobian(model, recs[-1].input)
    for n in range(10):
        assert not np.any(p[2 * n:2 * n + 2, 2 * n:])


@pytest.mark.parametrize("seed", [21, 22, 23])
def test_jacobian_finite_differences(seed):
    model, recs = random_scara_model(seed, n=10)
    u = recs[0].input
    p = rollout_jacobian(model, u)
    fd = fd_jacobian(model, u)
    assert np.max(np.abs(p - fd)) / np.max(np.abs(fd)) < 1e-4


def test_taylor_remainder_is_second_order():
    model, recs = random_scara_model(31, n=10)
    u = recs[0].input
    p = rollout_jacobian(model, u)
    direction = np.random.default_rng(0).standard_normal(u.data.size)
    base = rollout(model, u).data
    rem = []
    for h in (1e-2, 5e-3, 2.5e-3):
        pert = rollout(model, u.with_data(u.data + h * direction)).data
        rem.append(np.linalg.norm(pert - base - h * p @ direction))
    slopes = np.log2(np.array(rem[:-1]) / np.array(rem[1:]))
    assert np.all(slopes > 1.8), slopes
