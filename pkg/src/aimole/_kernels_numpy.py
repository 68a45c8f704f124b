"""Pure-numpy reference implementations of the hot loops."""
import numpy as np


def scara_rhs(x, u, p):
    l1, _, m1, m2, i1, i2, r1, r2, d1, d2 = p[:10]
    cb, sb = np.cos(x[1]), np.sin(x[1])
    ad, bd = x[2], x[3]
    m11 = i1 + i2 + m1 * r1**2 + m2 * (l1**2 + r2**2 + 2.0 * l1 * r2 * cb)
    m12 = i2 + m2 * (r2**2 + l1 * r2 * cb)
    m22 = i2 + m2 * r2**2
    h = m2 * l1 * r2 * sb
    f1 = u[0] + h * bd * ad + h * (ad + bd) * bd - d1 * ad
    f2 = u[1] - h * ad * ad - d2 * bd
    det = m11 * m22 - m12 * m12
    return np.array([ad, bd, (m22 * f1 - m12 * f2) / det, (m11 * f2 - m12 * f1) / det])


def rk4_simulate(inputs, x0, p, dt, substeps, bound):
    n_samples = inputs.shape[0]
    states = np.zeros((n_samples, 4))
    states[0] = x0
    h = dt / substeps
    clipped = np.clip(inputs, -p[10], p[10])
    for n in range(n_samples - 1):
        u = clipped[n]
        x = states[n].copy()
        for _ in range(substeps):
            k1 = scara_rhs(x, u, p)
            k2 = scara_rhs(x + 0.5 * h * k1, u, p)
            k3 = scara_rhs(x + 0.5 * h * k2, u, p)
            k4 = scara_rhs(x + h * k3, u, p)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[n + 1] = x
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > bound:
            return states, n + 1
    return states, -1


def se_gram(x1, x2, inv_ls):
    a = x1 * inv_ls
    b = x2 * inv_ls
    sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-0.5 * sq)


def lml_length_scale_grad(q, k, x, inv_ls):
    qk = q * k
    xs = x * inv_ls
    sq = xs * xs
    # sum_ij qk_ij (a_i - a_j)^2 = 2 sum_i a_i^2 rowsum_i - 2 a^T qk a, halved
    row = qk.sum(1)
    return row @ sq - np.einsum("id,ij,jd->d", xs, qk, xs)


def gp_mean_grad(x, inv_ls, w, v):
    diff = v[None, :] - x
    kw = np.exp(-0.5 * ((diff * inv_ls) ** 2).sum(1)) * w
    return kw.sum(), -(kw @ diff) * inv_ls**2


def rollout(x_train, inv_ls, weights, y_mean, y_std, x0, inputs, with_sens):
    n_samples, n_in = inputs.shape
    n_state = x0.shape[0]
    states = np.zeros((n_samples, n_state))
    states[0] = x0
    sens = np.zeros((n_samples, n_state, n_in * n_samples)) if with_sens else np.zeros((0, n_state, 0))
    sq_ls = inv_ls**2
    for n in range(n_samples - 1):
        v = np.concatenate([states[n], inputs[n]])
        diff = v[None, :] - x_train
        # (M, T): one kernel row per state GP
        kern = np.exp(-0.5 * np.einsum("td,md->mt", diff**2, sq_ls))
        kw = kern * weights
        states[n + 1] = y_mean + y_std * kw.sum(1)
        if not np.all(np.isfinite(states[n + 1])):
            return states, sens, n + 1
        if with_sens:
            jac = -(y_std[:, None] * (kw @ diff) * sq_ls)
            ncol = n * n_in
            sens[n + 1, :, :ncol] = jac[:, :n_state] @ sens[n, :, :ncol]
            sens[n + 1, :, ncol:ncol + n_in] = jac[:, n_state:]
    return states, sens, -1
