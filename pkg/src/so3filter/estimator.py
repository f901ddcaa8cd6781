"""Nonlinear stochastic attitude filter and its deterministic baseline.

The stochastic filter integrates

    R^'   = R^ [Omega_m - b^]x + [W]x R^
    b^'   = -gamma ||M R~||_I R^T Phi - gamma k_b b^
    sig^' = gamma ||M R~||_I / lam * diag(R^T Phi) R^T Phi / (1 + Ups) - gamma k_s sig^
    W     = k_w / (eps lam) * ((1 + Ups)^2 lam^2 + 1) / (1 + Ups) * Phi
            + R^ diag(R^T Phi) sig^ / (lam (1 + Ups))

with ``Phi``, ``||M R~||_I`` and ``Ups`` rebuilt from vector measurements.
The baseline replaces ``W`` by ``k_w Phi`` and drops the ``sig^`` path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dynamics import GyroModel, SigmaBound, TrueState
from .errors import NearUnstableSet, RhoUnavailable
from .measurement import InertialMatrix, MeasurementFrame, innovation
from .so3 import NEAR_PI_MARGIN, ecl_dist, to_rodriguez

# |1 + Upsilon| below this makes the correction numerically undefined
UNSTABLE_GUARD = 1e-6

KINDS = {"stochastic": _kernels.STOCHASTIC, "baseline": _kernels.BASELINE}


@dataclass(frozen=True)
class FilterGains:
    k_w: float = 5.0
    k_b: float = 0.5
    k_sigma: float = 0.5
    gamma: float = 1.0
    epsilon: float = 0.5

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise ValueError("all gains must be strictly positive")
        if 2.0 * self.k_w <= 1.0:
            raise ValueError("k_w must exceed 1/2")

    def as_array(self):
        return np.array([self.k_w, self.k_b, self.k_sigma, self.gamma, self.epsilon], dtype=float)


@dataclass(frozen=True)
class FilterState:
    r_hat: np.ndarray
    b_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))
    sigma_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass(frozen=True)
class ErrorTriple:
    r_tilde: np.ndarray
    rho_tilde: np.ndarray | None
    b_tilde: np.ndarray
    sigma_tilde: np.ndarray

    @property
    def rho_available(self) -> bool:
        return self.rho_tilde is not None


@dataclass(frozen=True)
class DiagnosticSample:
    t: float
    v_potential: float
    dist_weighted: float
    upsilon: float
    phi_vec: np.ndarray


def _checked_innovation(frame, state, mats):
    phi_v, dist, ups = innovation(frame, state.r_hat, mats)
    if abs(1.0 + ups) < UNSTABLE_GUARD:
        raise NearUnstableSet(f"1 + Upsilon = {1.0 + ups:.3e} is too close to zero")
    return phi_v, dist, ups


def correction_w(frame: MeasurementFrame, state: FilterState, mats: InertialMatrix, gains: FilterGains):
    """Innovation term ``W`` of the stochastic filter."""
    phi_v, _, ups = _checked_innovation(frame, state, mats)
    return _kernels.correction(
        phi_v, ups, np.ascontiguousarray(state.r_hat), np.asarray(state.sigma_hat, dtype=float),
        mats.lambda_min, gains.k_w, gains.epsilon,
    )


def bias_update(frame: MeasurementFrame, state: FilterState, mats: InertialMatrix, gains: FilterGains):
    """Time derivative of the gyro bias estimate."""
    phi_v, dist, _ = _checked_innovation(frame, state, mats)
    return _kernels.bias_rate(
        phi_v, dist, np.ascontiguousarray(state.r_hat), np.asarray(state.b_hat, dtype=float),
        gains.gamma, gains.k_b,
    )


def sigma_update(frame: MeasurementFrame, state: FilterState, mats: InertialMatrix, gains: FilterGains):
    """Time derivative of the covariance-bound estimate."""
    phi_v, dist, ups = _checked_innovation(frame, state, mats)
    return _kernels.sigma_rate(
        phi_v, dist, ups, np.ascontiguousarray(state.r_hat), np.asarray(state.sigma_hat, dtype=float),
        mats.lambda_min, gains.gamma, gains.k_sigma,
    )


def _advance(state, omega_m, frame, mats, gains, dt, kind):
    if dt <= 0:
        raise ValueError("dt must be positive")
    r, b, s, _, ups, status = _kernels.step(
        np.ascontiguousarray(state.r_hat, dtype=float),
        np.asarray(state.b_hat, dtype=float),
        np.asarray(state.sigma_hat, dtype=float),
        np.asarray(omega_m, dtype=float),
        np.ascontiguousarray(frame.ups_inertial),
        np.ascontiguousarray(frame.ups_body),
        np.ascontiguousarray(frame.s),
        np.ascontiguousarray(mats.m_inv),
        mats.lambda_min,
        gains.as_array(),
        kind,
        float(dt),
        UNSTABLE_GUARD,
    )
    if status != _kernels.OK:
        raise NearUnstableSet(f"1 + Upsilon = {1.0 + ups:.3e} is too close to zero")
    return FilterState(r, b, s)


def filter_step(state: FilterState, omega_m, frame: MeasurementFrame, mats: InertialMatrix,
                gains: FilterGains, dt: float) -> FilterState:
    """Advance the stochastic filter by ``dt``.

    ``R^+ = exp(W dt) R^ exp((Omega_m - b^) dt)`` followed by
    re-orthonormalization; ``b^`` and ``sig^`` use explicit Euler.
    """
    return _advance(state, omega_m, frame, mats, gains, dt, _kernels.STOCHASTIC)


def baseline_step(state: FilterState, omega_m, frame: MeasurementFrame, mats: InertialMatrix,
                  gains: FilterGains, dt: float) -> FilterState:
    """Advance the baseline filter (``W = k_w Phi``, ``sig^`` held at its value)."""
    return _advance(state, omega_m, frame, mats, gains, dt, _kernels.BASELINE)


def error_triple(truth: TrueState, state: FilterState, gyro: GyroModel, sigma: SigmaBound) -> ErrorTriple:
    r_tilde = np.asarray(truth.r) @ np.asarray(state.r_hat).T
    rho = None
    if np.trace(r_tilde) > -1.0 + NEAR_PI_MARGIN:
        rho = to_rodriguez(r_tilde)
    return ErrorTriple(
        r_tilde, rho, gyro.bias - np.asarray(state.b_hat), sigma.sigma - np.asarray(state.sigma_hat)
    )


def potential_v(err: ErrorTriple, mats: InertialMatrix, gains: FilterGains) -> float:
    """``(rho^T Mbar rho / (1 + |rho|^2))^2 / 4 + (|b~|^2 + |sig~|^2) / (2 gamma)``."""
    if err.rho_tilde is None:
        raise RhoUnavailable("attitude error too close to 180 degrees")
    rho = err.rho_tilde
    q = rho @ mats.m_bar @ rho / (1.0 + rho @ rho)
    return float(
        0.25 * q * q + (err.b_tilde @ err.b_tilde + err.sigma_tilde @ err.sigma_tilde) / (2.0 * gains.gamma)
    )


def diagnostics(t: float, err: ErrorTriple, frame: MeasurementFrame, state: FilterState,
                mats: InertialMatrix, gains: FilterGains) -> DiagnosticSample:
    phi_v, dist, ups = innovation(frame, state.r_hat, mats)
    return DiagnosticSample(t, potential_v(err, mats, gains), dist, ups, phi_v)


def attitude_error(truth_r, r_hat) -> float:
    return float(ecl_dist(np.asarray(truth_r) @ np.asarray(r_hat).T))

