"""Ground-truth rigid-body motion and gyroscope measurement synthesis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .so3 import skew


@dataclass(frozen=True)
class TrueState:
    r: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class GyroModel:
    """Gyro with constant bias ``b`` and diagonal diffusion ``Q``.

    ``q_diag`` is the diagonal of ``Q`` (rad/s per sqrt(Hz)). A time-varying
    diffusion is given by ``q_schedule``, a vectorized ``t -> (..., 3)``
    callable; when present it overrides ``q_diag``.
    """

    bias: np.ndarray
    q_diag: np.ndarray
    q_schedule: Callable | None = None
    q_max: float = np.inf

    def __post_init__(self):
        b = np.array(self.bias, dtype=float).reshape(3)
        q = np.array(self.q_diag, dtype=float).reshape(3)
        if np.any(q < 0) or np.any(q > self.q_max):
            raise ValueError("q_diag must lie in [0, q_max]")
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "q_diag", q)

    def q_at(self, t):
        """Diffusion diagonal at time(s) ``t``, shape ``t.shape + (3,)``."""
        t = np.asarray(t, dtype=float)
        if self.q_schedule is None:
            return np.broadcast_to(self.q_diag, t.shape + (3,)).copy()
        q = np.asarray(self.q_schedule(t), dtype=float)
        if np.any(q < 0) or np.any(q > self.q_max):
            raise ValueError("q schedule left [0, q_max]")
        return q


@dataclass(frozen=True)
class SigmaBound:
    sigma: np.ndarray


def paper_omega(t):
    """Reference angular velocity signal (rad/s), vectorized over ``t``."""
    t = np.asarray(t, dtype=float)
    return np.stack(
        [np.sin(0.7 * t), 0.7 * np.sin(0.5 * t + np.pi), 0.5 * np.sin(0.3 * t + np.pi / 3)],
        axis=-1,
    )


def constant_omega(value) -> Callable:
    value = np.array(value, dtype=float).reshape(3)

    def signal(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(value, t.shape + (3,)).copy()

    return signal


def propagate_true(state: TrueState, omega, dt: float) -> TrueState:
    """Advance ``R' = R [Omega]x`` by one step: ``R exp(Omega dt)``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    omega = np.ascontiguousarray(omega, dtype=float).reshape(1, 3)
    traj = _kernels.propagate_truth(np.ascontiguousarray(state.r, dtype=float), omega, float(dt))
    return TrueState(traj[1], state.t + dt)


def propagate_path(r0, omega, dt: float):
    """Truth at every step for a ``(N, 3)`` record of angular velocities.

    Returns ``(N + 1, 3, 3)`` attitudes starting with ``r0``.
    """
    return _kernels.propagate_truth(
        np.ascontiguousarray(r0, dtype=float), np.ascontiguousarray(omega, dtype=float), float(dt)
    )


def rodriguez_rate(rho, omega):
    """``rho' = (I + [rho]x + rho rho^T) Omega / 2``."""
    rho = np.asarray(rho, dtype=float)
    omega = np.asarray(omega, dtype=float)
    g = np.eye(3) + skew(rho) + np.multiply.outer(rho, rho)
    return 0.5 * g @ omega


def gyro_readings(omega, bias, q, xi, dt: float):
    """``Omega + b + Q xi / sqrt(dt)`` for stacked inputs."""
    return omega + bias + q * xi / np.sqrt(dt)


def sample_gyro(model: GyroModel, omega_true, dt: float, rng: np.random.Generator, t: float = 0.0):
    """One gyro reading. The white noise is discretized so that its integral
    over a step has covariance ``Q^2 dt``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    xi = rng.standard_normal(3)
    return gyro_readings(np.asarray(omega_true, dtype=float), model.bias, model.q_at(t), xi, dt)


def sigma_of(model: GyroModel, times) -> SigmaBound:
    """Per-axis maximum of ``Q_ii^2`` over the sampled ``times``."""
    q = model.q_at(np.atleast_1d(np.asarray(times, dtype=float)))
    return SigmaBound(np.max(q * q, axis=0))
