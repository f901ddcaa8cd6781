"""Fixed-size numeric kernels for the integration loops.

All functions here operate on single 3-vectors / 3x3 matrices (or on whole
time series inside a loop) and are compiled by numba unless
``SO3FILTER_DISABLE_JIT`` is set; see :mod:`so3filter._accel`.
"""

import numpy as np

from ._accel import jit

SMALL_ANGLE = 1e-8
# Newton-Schulz stops once ||R^T R - I||_max is below this
ORTHO_TARGET = 1e-15

STOCHASTIC = 0
BASELINE = 1

OK = -1


@jit
def mm3(a, b):
    c = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            c[i, j] = a[i, 0] * b[0, j] + a[i, 1] * b[1, j] + a[i, 2] * b[2, j]
    return c


@jit
def mmt3(a, b):
    """``a @ b.T``"""
    c = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            c[i, j] = a[i, 0] * b[j, 0] + a[i, 1] * b[j, 1] + a[i, 2] * b[j, 2]
    return c


@jit
def mv3(a, v):
    return np.array([
        a[0, 0] * v[0] + a[0, 1] * v[1] + a[0, 2] * v[2],
        a[1, 0] * v[0] + a[1, 1] * v[1] + a[1, 2] * v[2],
        a[2, 0] * v[0] + a[2, 1] * v[1] + a[2, 2] * v[2],
    ])


@jit
def mtv3(a, v):
    """``a.T @ v``"""
    return np.array([
        a[0, 0] * v[0] + a[1, 0] * v[1] + a[2, 0] * v[2],
        a[0, 1] * v[0] + a[1, 1] * v[1] + a[2, 1] * v[2],
        a[0, 2] * v[0] + a[1, 2] * v[1] + a[2, 2] * v[2],
    ])


@jit
def cross3(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


@jit
def skew3(v):
    m = np.zeros((3, 3))
    m[0, 1] = -v[2]
    m[0, 2] = v[1]
    m[1, 0] = v[2]
    m[1, 2] = -v[0]
    m[2, 0] = -v[1]
    m[2, 1] = v[0]
    return m


@jit
def exp3(w):
    theta = np.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
    if theta < SMALL_ANGLE:
        k = skew3(w)
        return np.eye(3) + k + 0.5 * mm3(k, k)
    k = skew3(w / theta)
    return np.eye(3) + np.sin(theta) * k + (1.0 - np.cos(theta)) * mm3(k, k)


@jit
def orthonormalize3(r):
    """Newton-Schulz polar iteration for an almost-orthonormal matrix."""
    x = r.copy()
    for _ in range(8):
        e = mm3(x.T, x) - np.eye(3)
        if np.max(np.abs(e)) < ORTHO_TARGET:
            break
        x = mm3(x, np.eye(3) - 0.5 * e)
    return x


@jit
def innovation(ups_i, ups_b, s, rhat, m_inv):
    """Measurement-only Phi, weighted distance and Upsilon.

    ``ups_i`` / ``ups_b`` hold one unit vector per row.
    """
    acc_phi = np.zeros(3)
    acc_s = np.zeros((3, 3))
    for i in range(ups_i.shape[0]):
        vhat = mtv3(rhat, ups_i[i])
        acc_phi += 0.5 * s[i] * cross3(ups_b[i], vhat)
        for r in range(3):
            for c in range(3):
                acc_s[r, c] += s[i] * vhat[r] * ups_b[i, c]
    phi_v = mv3(rhat, acc_phi)
    big_s = mmt3(mm3(rhat, acc_s), rhat)
    dist = 0.75 - 0.25 * (big_s[0, 0] + big_s[1, 1] + big_s[2, 2])
    ups = 0.0
    for r in range(3):
        for c in range(3):
            ups += m_inv[r, c] * big_s[c, r]
    return phi_v, dist, ups


@jit
def correction(phi_v, ups, rhat, shat, lam, k_w, eps):
    one_u = 1.0 + ups
    gain = k_w / (eps * lam) * (one_u * one_u * lam * lam + 1.0) / one_u
    x = mtv3(rhat, phi_v)
    return gain * phi_v + mv3(rhat, x * shat) / (lam * one_u)


@jit
def bias_rate(phi_v, dist, rhat, bhat, gamma, k_b):
    return -gamma * dist * mtv3(rhat, phi_v) - gamma * k_b * bhat


@jit
def sigma_rate(phi_v, dist, ups, rhat, shat, lam, gamma, k_s):
    x = mtv3(rhat, phi_v)
    return gamma * dist / lam * x * x / (1.0 + ups) - gamma * k_s * shat


@jit
def step(rhat, bhat, shat, omega_m, ups_i, ups_b, s, m_inv, lam, gains, kind, dt, guard):
    """One discrete filter update.

    ``gains`` is ``[k_w, k_b, k_sigma, gamma, epsilon]``. Returns the new
    ``(rhat, bhat, shat, dist, upsilon, status)``; ``status`` is ``OK`` or
    ``0`` when ``|1 + Upsilon| < guard`` (nothing is updated then).
    """
    k_w = gains[0]
    k_b = gains[1]
    k_s = gains[2]
    gamma = gains[3]
    eps = gains[4]
    phi_v, dist, ups = innovation(ups_i, ups_b, s, rhat, m_inv)
    bdot = bias_rate(phi_v, dist, rhat, bhat, gamma, k_b)
    if kind == BASELINE:
        w = k_w * phi_v
        sdot = np.zeros(3)
    else:
        if abs(1.0 + ups) < guard:
            return rhat, bhat, shat, dist, ups, 0
        w = correction(phi_v, ups, rhat, shat, lam, k_w, eps)
        sdot = sigma_rate(phi_v, dist, ups, rhat, shat, lam, gamma, k_s)
    r_new = mm3(mm3(exp3(w * dt), rhat), exp3((omega_m - bhat) * dt))
    r_new = orthonormalize3(r_new)
    return r_new, bhat + bdot * dt, shat + sdot * dt, dist, ups, OK


@jit
def run_filter(rhat0, bhat0, shat0, omega_m, ups_i, ups_b, s, m_inv, lam, gains, kind, dt, guard):
    """Run the filter over a whole measurement record.

    Row ``k`` of each history holds the estimate at ``t_k`` (before the
    ``k``-th update). The last element returned is the failing step index
    or ``OK``.
    """
    n = omega_m.shape[0]
    r_hist = np.empty((n, 3, 3))
    b_hist = np.empty((n, 3))
    s_hist = np.empty((n, 3))
    d_hist = np.empty(n)
    u_hist = np.empty(n)
    rhat = rhat0.copy()
    bhat = bhat0.copy()
    shat = shat0.copy()
    for k in range(n):
        r_hist[k] = rhat
        b_hist[k] = bhat
        s_hist[k] = shat
        rhat, bhat, shat, d, u, status = step(
            rhat, bhat, shat, omega_m[k], ups_i, ups_b[k], s, m_inv, lam, gains, kind, dt, guard
        )
        d_hist[k] = d
        u_hist[k] = u
        if status != OK:
            return r_hist, b_hist, s_hist, d_hist, u_hist, rhat, bhat, shat, k
    return r_hist, b_hist, s_hist, d_hist, u_hist, rhat, bhat, shat, OK


@jit
def propagate_truth(r0, omega, dt):
    """``R_{k+1} = orth(R_k exp(Omega_k dt))``; returns ``n + 1`` attitudes."""
    n = omega.shape[0]
    out = np.empty((n + 1, 3, 3))
    r = r0.copy()
    out[0] = r
    for k in range(n):
        r = orthonormalize3(mm3(r, exp3(omega[k] * dt)))
        out[k + 1] = r
    return out
