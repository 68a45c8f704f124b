"""Compiled inner loops. Mirrors ``_kernels_numpy`` function for function."""
import numpy as np
from numba import njit

# plant parameter vector layout, shared with _kernels_numpy and plant.py:
# l1, l2, m1, m2, I1, I2, r1, r2, d1, d2, torque_limit


@njit(cache=True)
def scara_rhs(x, u, p):
    l1 = p[0]
    m1, m2 = p[2], p[3]
    i1, i2 = p[4], p[5]
    r1, r2 = p[6], p[7]
    d1, d2 = p[8], p[9]
    cb = np.cos(x[1])
    sb = np.sin(x[1])
    ad = x[2]
    bd = x[3]
    m11 = i1 + i2 + m1 * r1 * r1 + m2 * (l1 * l1 + r2 * r2 + 2.0 * l1 * r2 * cb)
    m12 = i2 + m2 * (r2 * r2 + l1 * r2 * cb)
    m22 = i2 + m2 * r2 * r2
    h = m2 * l1 * r2 * sb
    # Christoffel form: C = [[-h*bd, -h*(ad+bd)], [h*ad, 0]]
    f1 = u[0] + h * bd * ad + h * (ad + bd) * bd - d1 * ad
    f2 = u[1] - h * ad * ad - d2 * bd
    det = m11 * m22 - m12 * m12
    out = np.empty(4)
    out[0] = ad
    out[1] = bd
    out[2] = (m22 * f1 - m12 * f2) / det
    out[3] = (m11 * f2 - m12 * f1) / det
    return out


@njit(cache=True)
def rk4_simulate(inputs, x0, p, dt, substeps, bound):
    n_samples = inputs.shape[0]
    states = np.zeros((n_samples, 4))
    states[0] = x0
    h = dt / substeps
    lim = p[10]
    u = np.empty(2)
    for n in range(n_samples - 1):
        for r in range(2):
            u[r] = min(max(inputs[n, r], -lim), lim)
        x = states[n].copy()
        for _ in range(substeps):
            k1 = scara_rhs(x, u, p)
            k2 = scara_rhs(x + 0.5 * h * k1, u, p)
            k3 = scara_rhs(x + 0.5 * h * k2, u, p)
            k4 = scara_rhs(x + h * k3, u, p)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for i in range(4):
            if not np.isfinite(x[i]) or abs(x[i]) > bound:
                states[n + 1] = x
                return states, n + 1
        states[n + 1] = x
    return states, -1


@njit(cache=True)
def se_gram(x1, x2, inv_ls):
    n1, dim = x1.shape
    n2 = x2.shape[0]
    out = np.empty((n1, n2))
    for i in range(n1):
        for j in range(n2):
            s = 0.0
            for d in range(dim):
                t = (x1[i, d] - x2[j, d]) * inv_ls[d]
                s += t * t
            out[i, j] = np.exp(-0.5 * s)
    return out


@njit(cache=True)
def lml_length_scale_grad(q, k, x, inv_ls):
    n, dim = x.shape
    g = np.zeros(dim)
    for i in range(n):
        for j in range(i + 1, n):
            qk = q[i, j] * k[i, j]
            for d in range(dim):
                t = (x[i, d] - x[j, d]) * inv_ls[d]
                g[d] += qk * t * t
    # off-diagonal pairs counted once above; the 1/2 factor cancels the symmetry
    return g


@njit(cache=True)
def gp_mean_grad(x, inv_ls, w, v):
    n, dim = x.shape
    mean = 0.0
    grad = np.zeros(dim)
    diff = np.empty(dim)
    for t in range(n):
        s = 0.0
        for d in range(dim):
            diff[d] = v[d] - x[t, d]
            z = diff[d] * inv_ls[d]
            s += z * z
        kw = np.exp(-0.5 * s) * w[t]
        mean += kw
        for d in range(dim):
            grad[d] -= kw * diff[d] * inv_ls[d] * inv_ls[d]
    return mean, grad


@njit(cache=True)
def rollout(x_train, inv_ls, weights, y_mean, y_std, x0, inputs, with_sens):
    n_samples, n_in = inputs.shape
    n_state = x0.shape[0]
    dim = n_state + n_in
    states = np.zeros((n_samples, n_state))
    states[0] = x0
    if with_sens:
        sens = np.zeros((n_samples, n_state, n_in * n_samples))
    else:
        sens = np.zeros((0, n_state, 0))
    v = np.empty(dim)
    jac = np.empty((n_state, dim))
    for n in range(n_samples - 1):
        v[:n_state] = states[n]
        v[n_state:] = inputs[n]
        for m in range(n_state):
            mu, g = gp_mean_grad(x_train, inv_ls[m], weights[m], v)
            states[n + 1, m] = y_mean[m] + y_std[m] * mu
            for d in range(dim):
                jac[m, d] = y_std[m] * g[d]
        for m in range(n_state):
            if not np.isfinite(states[n + 1, m]):
                return states, sens, n + 1
        if with_sens:
            ncol = n * n_in
            for m in range(n_state):
                for c in range(ncol):
                    s = 0.0
                    for i in range(n_state):
                        s += jac[m, i] * sens[n, i, c]
                    sens[n + 1, m, c] = s
                for r in range(n_in):
                    sens[n + 1, m, ncol + r] = jac[m, n_state + r]
    return states, sens, -1
