"""Randomized property checks for the SO(3) identities, the weighted-distance
lemma, the measurement reconstructions and the noise models.

Each check returns a :class:`Check`. Module functions are looked up through
their modules at call time, so a patched implementation is what gets tested.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import dynamics, measurement, so3

LEVELS = {"fast": 1_000, "full": 100_000}
# rejection bound on cond(M^I) for sampled measurement frames
MAX_FRAME_COND = 100.0
NOISE_SAMPLES = 100_000


@dataclass
class Check:
    name: str
    passed: bool
    worst: float
    tol: float
    n: int
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name:<34} worst={self.worst:.3e} tol={self.tol:.1e} n={self.n}"


def _check(name, worst, tol, n, t0, inclusive=True):
    worst = float(worst)
    ok = bool(np.isfinite(worst) and (worst <= tol if inclusive else worst < tol))
    return Check(name, ok, worst, tol, n, time.perf_counter() - t0)


# ---------------------------------------------------------------- samplers

def random_unit(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_rotations(rng, n):
    """Rotations with uniformly distributed angle in ``[0, pi)``."""
    theta = rng.uniform(0.0, np.pi, n)
    return so3.from_angle_axis(theta, random_unit(rng, n))


def random_rho(rng, n, max_angle=np.pi - 1e-3):
    theta = rng.uniform(0.0, max_angle, n)
    return np.tan(theta / 2)[:, None] * random_unit(rng, n)


def random_spd_trace3(rng, n, min_eig=0.02):
    """Symmetric positive-definite matrices with trace 3."""
    eig = rng.dirichlet(np.ones(3), n) * (3.0 - 3 * min_eig) + min_eig
    q = random_rotations(rng, n)
    return np.einsum("nij,nj,nkj->nik", q, eig, q)


def _sym(rng, n):
    a = rng.standard_normal((n, 3, 3))
    return a + np.swapaxes(a, 1, 2)


# ---------------------------------------------------------------- identities

def check_vex_skew(rng, n):
    t0 = time.perf_counter()
    v = rng.standard_normal((n, 3))
    return _check("vex(skew(v)) == v", np.max(np.abs(so3.vex(so3.skew(v)) - v)), 0.0, n, t0)


def check_identity_cross(rng, n):
    t0 = time.perf_counter()
    p, b = rng.standard_normal((2, n, 3))
    lhs = so3.skew(np.cross(p, b))
    rhs = b[:, :, None] * p[:, None, :] - p[:, :, None] * b[:, None, :]
    return _check("[p x b]x = b p^T - p b^T", np.max(np.abs(lhs - rhs)), 1e-10, n, t0)


def check_identity_conjugation(rng, n):
    t0 = time.perf_counter()
    r = random_rotations(rng, n)
    b = rng.standard_normal((n, 3))
    lhs = so3.skew(np.einsum("nij,nj->ni", r, b))
    rhs = r @ so3.skew(b) @ np.swapaxes(r, 1, 2)
    return _check("[R b]x = R [b]x R^T", np.max(np.abs(lhs - rhs)), 1e-10, n, t0)


def check_identity_square(rng, n):
    t0 = time.perf_counter()
    b = rng.standard_normal((n, 3))
    k = so3.skew(b)
    rhs = -np.sum(b * b, axis=1)[:, None, None] * so3.I3 + b[:, :, None] * b[:, None, :]
    return _check("[b]x^2 = -b^T b I + b b^T", np.max(np.abs(k @ k - rhs)), 1e-10, n, t0)


def check_identity_anticommutator(rng, n):
    t0 = time.perf_counter()
    bm = _sym(rng, n)
    b = rng.standard_normal((n, 3))
    k = so3.skew(b)
    lhs = bm @ k + k @ bm
    rhs = np.trace(bm, axis1=1, axis2=2)[:, None, None] * k - so3.skew(np.einsum("nij,nj->ni", bm, b))
    return _check("B[b]x + [b]xB = Tr(B)[b]x - [Bb]x", np.max(np.abs(lhs - rhs)), 1e-10, n, t0)


def check_identity_trace(rng, n):
    t0 = time.perf_counter()
    bm = _sym(rng, n)
    k = so3.skew(rng.standard_normal((n, 3)))
    return _check("Tr(B [b]x) = 0", np.max(np.abs(np.trace(bm @ k, axis1=1, axis2=2))), 1e-12, n, t0)


def check_ecl_range(rng, n):
    t0 = time.perf_counter()
    d = so3.ecl_dist(random_rotations(rng, n))
    worst = max(0.0, -d.min(), d.max() - 1.0)
    return _check("0 <= ||R||_I <= 1", worst, 1e-15, n, t0)


def check_rodriguez_distance(rng, n):
    t0 = time.perf_counter()
    rho = random_rho(rng, n)
    p = np.sum(rho * rho, axis=1)
    worst = np.max(np.abs(so3.ecl_dist(so3.from_rodriguez(rho)) - p / (1 + p)))
    return _check("||R(rho)||_I = |rho|^2/(1+|rho|^2)", worst, 1e-10, n, t0)


def check_phi_rodriguez(rng, n):
    t0 = time.perf_counter()
    rho = random_rho(rng, n)
    p = np.sum(rho * rho, axis=1)
    worst = np.max(np.abs(so3.phi(so3.from_rodriguez(rho)) - 2 * rho / (1 + p)[:, None]))
    return _check("Phi(R(rho)) = 2 rho/(1+|rho|^2)", worst, 1e-10, n, t0)


# ---------------------------------------------------------------- lemma

def _lemma_samples(rng, n):
    rho = random_rho(rng, n)
    m = random_spd_trace3(rng, n)
    m_bar = np.trace(m, axis1=1, axis2=2)[:, None, None] * so3.I3 - m
    lam = np.linalg.svd(m_bar, compute_uv=False).min(axis=1)
    r = so3.from_rodriguez(rho)
    return rho, m, m_bar, lam, r


def check_lemma_distance(rng, n):
    t0 = time.perf_counter()
    rho, m, m_bar, _, r = _lemma_samples(rng, n)
    p = np.sum(rho * rho, axis=1)
    rhs = 0.5 * np.einsum("ni,nij,nj->n", rho, m_bar, rho) / (1 + p)
    return _check("||M R||_I = rho^T Mbar rho/(2(1+|rho|^2))",
                  np.max(np.abs(so3.weighted_dist(m, r) - rhs)), 1e-10, n, t0)


def check_lemma_phi(rng, n):
    t0 = time.perf_counter()
    rho, m, m_bar, _, r = _lemma_samples(rng, n)
    p = np.sum(rho * rho, axis=1)
    a = so3.I3 + so3.skew(rho)
    rhs = np.einsum("nji,njk,nk->ni", a, m_bar, rho) / (1 + p)[:, None]
    return _check("Phi(M R) = (I+[rho]x)^T Mbar rho/(1+|rho|^2)",
                  np.max(np.abs(so3.phi(m @ r) - rhs)), 1e-10, n, t0)


def _rel_excess(lhs, rhs):
    """Largest amount by which ``lhs <= rhs`` fails beyond rounding."""
    slack = 1e-12 * np.maximum(np.abs(lhs), np.abs(rhs)) + 1e-15
    return np.max(np.maximum(lhs - rhs - slack, 0.0))


def check_lemma_bound(rng, n):
    t0 = time.perf_counter()
    _, m, _, lam, r = _lemma_samples(rng, n)
    lhs = so3.weighted_dist(m, r)
    ups = np.trace(np.linalg.inv(m) @ m @ r, axis1=1, axis2=2)
    ph = so3.phi(m @ r)
    rhs = 2.0 / lam * np.sum(ph * ph, axis=1) / (1 + ups)
    return _check("||M R||_I <= 2|Phi|^2/(lam(1+Ups))", _rel_excess(lhs, rhs), 0.0, n, t0)


def check_phi_norm_bound(rng, n):
    t0 = time.perf_counter()
    _, m, _, lam, r = _lemma_samples(rng, n)
    ph = so3.phi(m @ r)
    lhs = 2 * lam * (1 - so3.ecl_dist(r)) * so3.weighted_dist(m, r)
    return _check("|Phi|^2 >= 2 lam (1-||R||_I)||M R||_I",
                  _rel_excess(lhs, np.sum(ph * ph, axis=1)), 0.0, n, t0)


# ---------------------------------------------------------------- measurement

def random_frame(rng, n_vec=None, max_cond=MAX_FRAME_COND):
    """Random reference set with positive weights and a well-conditioned ``M^I``.

    Nearly coplanar draws are rejected: ``Upsilon`` goes through ``(M^I)^-1``,
    so its rounding error grows with ``cond(M^I)`` and a fixed absolute
    tolerance would otherwise be testing the sampler, not the code.
    """
    while True:
        k = n_vec or int(rng.integers(2, 6))
        refs = measurement.ReferenceVectorSet(random_unit(rng, k), weights=rng.uniform(0.2, 2.0, k))
        try:
            m = measurement.inertial_matrix(measurement.augment_cross(
                measurement.normalize_frame(refs.v_inertial, refs))).m
        except ValueError:  # collinear pair or rank deficient
            continue
        if np.linalg.cond(m) <= max_cond:
            return refs


def noise_free_frame(refs, r_true):
    raw = refs.v_inertial @ r_true
    return measurement.augment_cross(measurement.normalize_frame(raw, refs))


def check_measurement_oracles(rng, n):
    """Vector reconstructions against matrix-space values, noise free."""
    t0 = time.perf_counter()
    worst = np.zeros(5)
    for _ in range(n):
        refs = random_frame(rng)
        r, r_hat = random_rotations(rng, 2)
        frame = noise_free_frame(refs, r)
        mats = measurement.inertial_matrix(frame)
        r_tilde = r @ r_hat.T
        mrt = mats.m @ r_tilde
        ups = measurement.upsilon_from_vectors(frame, r_hat, mats)
        worst[0] = max(worst[0], np.max(np.abs(measurement.phi_from_vectors(frame, r_hat) - so3.phi(mrt))))
        worst[1] = max(worst[1], abs(measurement.dist_from_vectors(frame, r_hat) - so3.weighted_dist(mats.m, r_tilde)))
        worst[2] = max(worst[2], abs(ups - np.trace(np.linalg.inv(mats.m) @ mrt)))
        worst[3] = max(worst[3], np.max(np.abs(measurement.body_matrix(frame) - r.T @ mats.m @ r)))
        if np.trace(r_tilde) > -1 + 1e-3:
            rho = so3.to_rodriguez(r_tilde)
            worst[4] = max(worst[4], abs(1 + rho @ rho - 4 / (1 + ups)) / (1 + rho @ rho))
    el = time.perf_counter() - t0
    names = ("Phi from vectors", "||M R~||_I from vectors", "Upsilon from vectors", "M^B = R^T M^I R",
             "1+|rho~|^2 = 4/(1+Ups) (rel)")
    tols = (1e-10, 1e-10, 1e-10, 1e-10, 1e-9)
    return [Check(nm, bool(w <= tl), float(w), tl, n, el) for nm, w, tl in zip(names, worst, tols)]


def check_mbar_eigen(rng, n):
    t0 = time.perf_counter()
    m = random_spd_trace3(rng, n)
    lm = np.linalg.eigvalsh(m)
    m_bar = 3.0 * so3.I3 - m
    pair = np.sort(np.stack([lm[:, 2] + lm[:, 1], lm[:, 2] + lm[:, 0], lm[:, 1] + lm[:, 0]], axis=1), axis=1)
    return _check("eig(Mbar) = pairwise sums eig(M)", np.max(np.abs(np.linalg.eigvalsh(m_bar) - pair)), 1e-9, n, t0)


# ---------------------------------------------------------------- noise

def check_gyro_noise(rng, n=NOISE_SAMPLES, dt=1e-3):
    t0 = time.perf_counter()
    model = dynamics.GyroModel(bias=0.2 * np.array([1.0, -1.0, 1.0]), q_diag=[0.2, 0.1, 0.3])
    omega = np.array([0.3, -0.1, 0.2])
    xi = rng.standard_normal((n, 3))
    om = dynamics.gyro_readings(omega, model.bias, model.q_diag, xi, dt)
    inc = (om - omega - model.bias) * dt
    rel = np.max(np.abs(inc.var(axis=0) / (model.q_diag**2 * dt) - 1))
    mean_err = np.max(np.abs(om.mean(axis=0) - omega - model.bias) / (model.q_diag / np.sqrt(dt) / np.sqrt(n)))
    el = time.perf_counter() - t0
    return [Check("gyro increment variance ~ Q^2 dt (rel)", bool(rel <= 0.05), float(rel), 0.05, n, el),
            Check("gyro mean -> bias (in SE units)", bool(mean_err <= 3), float(mean_err), 3.0, n, el)]


def check_body_noise(rng, n=NOISE_SAMPLES):
    t0 = time.perf_counter()
    refs = measurement.ReferenceVectorSet(
        [np.array([1.0, -1.0, 1.0]) / np.sqrt(3), [0.0, 0.0, 1.0]],
        bias_body=[0.1 * np.array([-1.0, 1.0, 0.5]), [0.0, 0.0, 0.1]],
        noise_std=[0.2, 0.2],
    )
    r = random_rotations(rng, 1)[0]
    raw = measurement.body_readings(r[None], refs, rng.standard_normal((n, refs.n, 3)))
    err = raw - refs.v_inertial @ r
    z = np.max(np.abs(err.mean(axis=0) - refs.bias_body) / (0.2 / np.sqrt(n)))
    return _check("body noise mean -> bias (in SE units)", z, 3.0, n, t0)


def run_suite(level: str = "fast", seed: int = 12345) -> list[Check]:
    n = LEVELS[level]
    rng = np.random.default_rng(seed)
    checks = [
        check_vex_skew(rng, n),
        check_identity_cross(rng, n),
        check_identity_conjugation(rng, n),
        check_identity_square(rng, n),
        check_identity_anticommutator(rng, n),
        check_identity_trace(rng, n),
        check_ecl_range(rng, n),
        check_rodriguez_distance(rng, n),
        check_phi_rodriguez(rng, n),
        check_lemma_distance(rng, n),
        check_lemma_phi(rng, n),
        check_lemma_bound(rng, n),
        check_phi_norm_bound(rng, n),
        check_mbar_eigen(rng, n),
    ]
    checks += check_measurement_oracles(rng, max(100, n // 10))
    checks += check_gyro_noise(rng)
    checks.append(check_body_noise(rng))
    return checks
