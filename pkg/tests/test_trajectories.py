import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aimole.errors import DegenerateNormalizationError, StructuralError
from aimole.trajectories import (LiftedTrajectory, TrialRecord, deinterleave, interleave,
                                 normalized_error_norm, read_csv, tracking_error,
                                 variable_block, write_csv)


def test_interleave_layout():
    traj = interleave([[1, 2], [3, 4]], 0.02)
    assert traj.data.tolist() == [1, 2, 3, 4]
    assert (traj.dim_per_sample, traj.num_samples, traj.sample_period) == (2, 2, 0.02)


def test_interleave_single_sample():
    assert interleave([[5]], 0.1).data.tolist() == [5]


def test_interleave_roundtrip_list():
    samples = [[1.0], [2.0], [3.0]]
    assert [s.tolist() for s in deinterleave(interleave(samples, 0.02))] == samples


def test_interleave_rejects_ragged():
    with pytest.raises(StructuralError):
        interleave([[1, 2], [3]], 0.02)
    with pytest.raises(StructuralError):
        interleave([], 0.02)


def test_length_invariant():
    with pytest.raises(StructuralError):
        LiftedTrajectory(np.zeros(5), 2, 3, 0.02)
    with pytest.raises(StructuralError):
        LiftedTrajectory(np.zeros(4), 2, 2, 0.0)


def test_data_is_immutable():
    traj = interleave([[1, 2]], 0.02)
    with pytest.raises(ValueError):
        traj.data[0] = 3.0


@pytest.mark.parametrize("d,expected", [(1, [1, 3]), (2, [2, 4])])
def test_variable_block(d, expected):
    traj = LiftedTrajectory([1, 2, 3, 4], 2, 2, 0.02)
    assert variable_block(traj, d).tolist() == expected


def test_variable_block_scalar_and_range():
    traj = LiftedTrajectory([7, 8, 9], 1, 3, 0.02)
    assert variable_block(traj, 1).tolist() == [7, 8, 9]
    for bad in (0, 2):
        with pytest.raises(StructuralError):
            variable_block(traj, bad)


def test_tracking_error_examples():
    r = LiftedTrajectory([1, 1], 1, 2, 0.02)
    y = LiftedTrajectory([0, 2], 1, 2, 0.02)
    assert tracking_error(r, y).data.tolist() == [1, -1]
    assert np.all(tracking_error(r, r).data == 0)
    zero = LiftedTrajectory([0, 0], 1, 2, 0.02)
    assert tracking_error(zero, y).data.tolist() == [0, -2]


def test_tracking_error_checks_shape_and_dt():
    r = LiftedTrajectory([1, 1], 1, 2, 0.02)
    with pytest.raises(StructuralError):
        tracking_error(r, LiftedTrajectory([1, 1], 2, 1, 0.02))
    with pytest.raises(StructuralError):
        tracking_error(r, LiftedTrajectory([1, 1], 1, 2, 0.01))


def test_normalized_error_norm_examples():
    r = LiftedTrajectory([2, 0], 1, 2, 0.02)
    y1 = LiftedTrajectory([0, 0], 1, 2, 0.02)
    assert normalized_error_norm(r, y1, y1) == 1.0
    assert normalized_error_norm(r, r, y1) == 0.0
    assert normalized_error_norm(r, LiftedTrajectory([1, 0], 1, 2, 0.02), y1) == 0.5
    with pytest.raises(DegenerateNormalizationError):
        normalized_error_norm(r, y1, r)


def test_trial_record_checks_horizon():
    a = LiftedTrajectory(np.zeros(4), 2, 2, 0.02)
    b = LiftedTrajectory(np.zeros(6), 2, 3, 0.02)
    with pytest.raises(StructuralError):
        TrialRecord(1, a, a, b, a)


def test_csv_roundtrip(tmp_path, rng):
    traj = interleave(rng.standard_normal((7, 3)), 0.05)
    path = tmp_path / "t.csv"
    write_csv(traj, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "sample,var_1,var_2,var_3"
    assert lines[1].startswith("1,")
    assert read_csv(path, 0.05) == traj


shapes = st.tuples(st.integers(1, 6), st.integers(1, 12))


@settings(max_examples=60, deadline=None)
@given(shapes.flatmap(lambda s: arrays(np.float64, s, elements=st.floats(-1e6, 1e6))))
def test_roundtrip_property(samples):
    traj = interleave(samples, 0.01)
    back = np.array(deinterleave(traj))
    assert np.array_equal(back, samples)
    blocks = np.column_stack([variable_block(traj, d + 1) for d in range(traj.dim_per_sample)])
    assert np.array_equal(interleave(blocks, 0.01).data, traj.data)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, 8, elements=st.floats(-100, 100)),
       arrays(np.float64, 8, elements=st.floats(-100, 100)),
       arrays(np.float64, 8, elements=st.floats(-100, 100)),
       st.floats(0.01, 100))
def test_normalized_norm_scale_invariance(r, yj, y1, c):
    if np.linalg.norm(r - y1) < 1e-3:
        return
    mk = lambda v: LiftedTrajectory(v, 2, 4, 0.02)
    base = normalized_error_norm(mk(r), mk(yj), mk(y1))
    # scale both error trajectories by c: y' = r - c (r - y)
    scaled = normalized_error_norm(mk(r), mk(r - c * (r - yj)), mk(r - c * (r - y1)))
    assert scaled == pytest.approx(base, rel=1e-9, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 6, elements=st.floats(-1e3, 1e3)))
def test_self_error_is_zero(v):
    r = LiftedTrajectory(v, 3, 2, 0.02)
    assert not np.any(tracking_error(r, r).data)
