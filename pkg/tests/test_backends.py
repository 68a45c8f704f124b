"""The numba kernels and their pure-numpy fallbacks must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from aimole import _accel, _kernels_numpy as npk
from aimole.plant import PlantParameters

nbk = pytest.importorskip("aimole._kernels_numba")

P = PlantParameters().as_vector()


def test_scara_rhs(rng):
    for _ in range(50):
        x = rng.uniform(-3, 3, 4)
        u = rng.uniform(-5, 5, 2)
        np.testing.assert_allclose(nbk.scara_rhs(x, u, P), npk.scara_rhs(x, u, P), rtol=1e-13, atol=1e-13)


def test_rk4_simulate(rng):
    u = rng.uniform(-2, 2, (120, 2))
    x0 = np.array([0.0, 0.5, 0.0, 0.0])
    s1, f1 = nbk.rk4_simulate(u, x0, P, 0.02, 4, 1e3)
    s2, f2 = npk.rk4_simulate(u, x0, P, 0.02, 4, 1e3)
    assert f1 == f2 == -1
    np.testing.assert_allclose(s1, s2, rtol=1e-10, atol=1e-12)


def test_rk4_divergence_index_agrees(rng):
    u = np.full((60, 2), 5.0)
    x0 = np.array([0.0, 0.5, 0.0, 0.0])
    _, f1 = nbk.rk4_simulate(u, x0, P, 0.02, 4, 2.0)
    _, f2 = npk.rk4_simulate(u, x0, P, 0.02, 4, 2.0)
    assert f1 == f2 > 0


def test_gram_and_gradients(rng):
    x = rng.standard_normal((30, 5))
    z = rng.standard_normal((20, 5))
    inv_ls = rng.uniform(0.3, 2, 5)
    np.testing.assert_allclose(nbk.se_gram(x, z, inv_ls), npk.se_gram(x, z, inv_ls), rtol=1e-12, atol=1e-14)
    k = npk.se_gram(x, x, inv_ls)
    q = rng.standard_normal((30, 30))
    q = q + q.T
    np.testing.assert_allclose(nbk.lml_length_scale_grad(q, k, x, inv_ls),
                               npk.lml_length_scale_grad(q, k, x, inv_ls), rtol=1e-10, atol=1e-10)
    w, v = rng.standard_normal(30), rng.standard_normal(5)
    for a, b in zip(nbk.gp_mean_grad(x, inv_ls, w, v), npk.gp_mean_grad(x, inv_ls, w, v)):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_rollout(rng):
    m, r, t, n = 4, 2, 40, 25
    x_train = rng.standard_normal((t, m + r))
    inv_ls = rng.uniform(0.3, 1.5, (m, m + r))
    weights = 0.1 * rng.standard_normal((m, t))
    y_mean, y_std = rng.standard_normal(m), rng.uniform(0.5, 2, m)
    x0, u = 0.1 * rng.standard_normal(m), rng.standard_normal((n, r))
    a = nbk.rollout(x_train, inv_ls, weights, y_mean, y_std, x0, u, True)
    b = npk.rollout(x_train, inv_ls, weights, y_mean, y_std, x0, u, True)
    assert a[2] == b[2] == -1
    np.testing.assert_allclose(a[0], b[0], rtol=1e-11, atol=1e-12)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-9, atol=1e-11)


def test_env_flag_selects_numpy():
    env = dict(os.environ, AIMOLE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from aimole import _accel; print(_accel.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    assert _accel.BACKEND in ("numba", "numpy")
