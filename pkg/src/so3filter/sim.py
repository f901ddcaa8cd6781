"""Scenario assembly, truth/gyro/filter co-simulation and Monte Carlo."""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import _kernels
from .dynamics import GyroModel, SigmaBound, constant_omega, gyro_readings, paper_omega, propagate_path, sigma_of
from .errors import ConfigError, NearUnstableSet
from .estimator import KINDS, UNSTABLE_GUARD, FilterGains, FilterState
from .measurement import (
    ReferenceVectorSet,
    augment_body_stack,
    augment_cross,
    body_readings,
    inertial_matrix,
    normalize_frame,
)
from .so3 import ecl_dist, euler_zyx, from_angle_axis, is_rotation

STEADY_FRACTION = 0.2
DEFAULT_DECIMATION = 10
NOISE_MODES = ("measurement", "process")


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class Scenario:
    duration: float
    dt: float
    gyro: GyroModel
    refs: ReferenceVectorSet
    r0_true: np.ndarray
    r0_hat: np.ndarray
    gains: FilterGains = field(default_factory=FilterGains)
    seed: int = 0
    filter_kind: str = "stochastic"
    omega_kind: str = "paper"
    omega_value: tuple = (0.0, 0.0, 0.0)
    b_hat0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    sigma_hat0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    noise_mode: str = "measurement"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not (self.duration >= self.dt and math.isfinite(self.duration)):
            raise ConfigError("duration must be finite and at least dt")
        if self.filter_kind not in KINDS:
            raise ConfigError(f"unknown filter kind {self.filter_kind!r}")
        if self.omega_kind not in ("paper", "constant"):
            raise ConfigError(f"unknown omega kind {self.omega_kind!r}")
        if self.noise_mode not in NOISE_MODES:
            raise ConfigError(f"unknown noise mode {self.noise_mode!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        for name in ("r0_true", "r0_hat"):
            if not is_rotation(getattr(self, name)):
                raise ConfigError(f"{name} is not a rotation matrix")

    @property
    def omega_signal(self) -> Callable:
        if self.omega_kind == "paper":
            return paper_omega
        return constant_omega(self.omega_value)

    @property
    def n_steps(self) -> int:
        return int(math.ceil(round(self.duration / self.dt, 9)))

    def with_overrides(self, **changes) -> "Scenario":
        try:
            return replace(self, **changes)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    def config_hash(self) -> str:
        from .scenario_io import dump_scenario

        return hashlib.sha256(dump_scenario(self).encode()).hexdigest()[:16]


def paper_scenario() -> Scenario:
    """The reference simulation setup (10 s at dt = 1e-3 by default)."""
    refs = ReferenceVectorSet(
        v_inertial=[_unit([1.0, -1.0, 1.0]), [0.0, 0.0, 1.0]],
        bias_body=[0.1 * np.array([-1.0, 1.0, 0.5]), 0.1 * np.array([0.0, 0.0, 1.0])],
        noise_std=[0.2, 0.2],
        weights=[1.0, 1.0],
    )
    return Scenario(
        duration=10.0,
        dt=1e-3,
        gyro=GyroModel(bias=0.2 * np.array([1.0, -1.0, 1.0]), q_diag=[0.2, 0.2, 0.2]),
        refs=refs,
        r0_true=np.eye(3),
        r0_hat=from_angle_axis(np.deg2rad(179.0), _unit([1.0, 5.0, 3.0])),
        gains=FilterGains(k_w=5.0, k_b=0.5, k_sigma=0.5, gamma=1.0, epsilon=0.5),
        seed=0,
    )


def noise_free(sc: Scenario) -> Scenario:
    """Same scenario with every bias and noise source removed."""
    refs = ReferenceVectorSet(sc.refs.v_inertial, None, None, sc.refs.weights)
    return sc.with_overrides(gyro=GyroModel(np.zeros(3), np.zeros(3)), refs=refs)


def trial_rng(seed: int, trial: int | None = None) -> np.random.Generator:
    """Random stream of a run.

    Trial ``i`` of a batch with base seed ``s`` uses
    ``SeedSequence(s, spawn_key=(i,))``; a plain run uses ``SeedSequence(s)``.
    """
    if trial is None:
        ss = np.random.SeedSequence(seed)
    else:
        ss = np.random.SeedSequence(seed, spawn_key=(int(trial),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class TrajectoryLog:
    """Decimated per-step records of one run (angles in radians)."""

    t: np.ndarray
    dist_tilde: np.ndarray
    dist_weighted: np.ndarray
    upsilon: np.ndarray
    b_hat: np.ndarray
    sigma_hat: np.ndarray
    b_tilde: np.ndarray
    sigma_tilde: np.ndarray
    euler_true: np.ndarray
    euler_hat: np.ndarray
    v_potential: np.ndarray
    seed: int
    trial: int | None
    config_hash: str
    filter_kind: str
    duration: float
    final_state: FilterState
    sigma: SigmaBound
    sigma_hat_negative_steps: int = 0

    def __len__(self):
        return self.t.shape[0]

    @property
    def rho_tilde_sq(self):
        """``|rho~|^2 = d / (1 - d)`` from the normalized distance ``d``."""
        d = self.dist_tilde
        return d / (1.0 - d)

    def steady_mask(self, fraction: float = STEADY_FRACTION):
        return self.t >= self.duration * (1.0 - fraction) - 1e-12

    def steady_mean_dist(self, fraction: float = STEADY_FRACTION) -> float:
        return float(self.dist_tilde[self.steady_mask(fraction)].mean())

    def error_sq(self):
        """``|rho~|^2 + |b~|^2 + |sigma~|^2`` per record."""
        return self.rho_tilde_sq + np.sum(self.b_tilde**2, axis=1) + np.sum(self.sigma_tilde**2, axis=1)


@dataclass
class _Raw:
    times: np.ndarray
    truth: np.ndarray
    r_hat: np.ndarray
    b_hat: np.ndarray
    s_hat: np.ndarray
    dist_meas: np.ndarray
    ups_meas: np.ndarray
    final: FilterState
    mats: object
    sigma: SigmaBound


def simulate(sc: Scenario, trial: int | None = None, filter_kind: str | None = None) -> _Raw:
    """Full-rate simulation; see :func:`run` for the logged version."""
    kind = filter_kind or sc.filter_kind
    n = sc.n_steps
    dt = sc.dt
    times = np.arange(n) * dt
    omega = sc.omega_signal(times)
    rng = trial_rng(sc.seed, trial)
    xi_gyro = rng.standard_normal((n, 3))
    xi_body = rng.standard_normal((n, sc.refs.n, 3))
    q = sc.gyro.q_at(times)
    if sc.noise_mode == "measurement":
        omega_true = omega
        omega_m = gyro_readings(omega, sc.gyro.bias, q, xi_gyro, dt)
    else:
        omega_true = gyro_readings(omega, 0.0, q, xi_gyro, dt)
        omega_m = omega + sc.gyro.bias
    truth = propagate_path(sc.r0_true, omega_true, dt)[:n]

    raw = body_readings(truth, sc.refs, xi_body)
    ups_b = raw / np.linalg.norm(raw, axis=-1, keepdims=True)
    frame0 = normalize_frame(raw[0], sc.refs)
    if sc.refs.n == 2:
        ups_b = augment_body_stack(ups_b)
        frame0 = augment_cross(frame0)
    mats = inertial_matrix(frame0)

    out = _kernels.run_filter(
        np.ascontiguousarray(sc.r0_hat, dtype=float),
        np.asarray(sc.b_hat0, dtype=float).copy(),
        np.asarray(sc.sigma_hat0, dtype=float).copy(),
        np.ascontiguousarray(omega_m),
        np.ascontiguousarray(frame0.ups_inertial),
        np.ascontiguousarray(ups_b),
        np.ascontiguousarray(frame0.s),
        np.ascontiguousarray(mats.m_inv),
        mats.lambda_min,
        sc.gains.as_array(),
        KINDS[kind],
        float(dt),
        UNSTABLE_GUARD,
    )
    r_hist, b_hist, s_hist, d_hist, u_hist, r_f, b_f, s_f, fail = out
    if fail != _kernels.OK:
        raise NearUnstableSet(
            f"1 + Upsilon = {1.0 + u_hist[fail]:.3e} at step {fail} (t = {fail * dt:.6g} s)", step=int(fail)
        )
    return _Raw(times, truth, r_hist, b_hist, s_hist, d_hist, u_hist, FilterState(r_f, b_f, s_f), mats,
                sigma_of(sc.gyro, times))


def run(sc: Scenario, decimation: int = DEFAULT_DECIMATION, trial: int | None = None,
        filter_kind: str | None = None) -> TrajectoryLog:
    """Simulate one trial and return the decimated log.

    Deterministic: identical scenario, trial and decimation give identical
    logs.
    """
    if decimation < 1:
        raise ConfigError("decimation must be >= 1")
    raw = simulate(sc, trial, filter_kind)
    idx = np.arange(0, raw.times.shape[0], decimation)
    r_true = raw.truth[idx]
    r_hat = raw.r_hat[idx]
    r_tilde = r_true @ np.swapaxes(r_hat, -1, -2)
    b_tilde = sc.gyro.bias - raw.b_hat[idx]
    s_tilde = raw.sigma.sigma - raw.s_hat[idx]
    m = raw.mats.m
    wdist = 0.25 * (np.trace(m) - np.einsum("ij,kji->k", m, r_tilde))
    # attitude part of the potential equals ||M R~||_I^2
    v_pot = wdist**2 + (np.sum(b_tilde**2, axis=1) + np.sum(s_tilde**2, axis=1)) / (2.0 * sc.gains.gamma)
    return TrajectoryLog(
        t=raw.times[idx],
        dist_tilde=ecl_dist(r_tilde),
        dist_weighted=raw.dist_meas[idx],
        upsilon=raw.ups_meas[idx],
        b_hat=raw.b_hat[idx],
        sigma_hat=raw.s_hat[idx],
        b_tilde=b_tilde,
        sigma_tilde=s_tilde,
        euler_true=euler_zyx(r_true),
        euler_hat=euler_zyx(r_hat),
        v_potential=v_pot,
        seed=sc.seed,
        trial=trial,
        config_hash=sc.config_hash(),
        filter_kind=filter_kind or sc.filter_kind,
        duration=sc.duration,
        final_state=raw.final,
        sigma=raw.sigma,
        sigma_hat_negative_steps=int(np.any(raw.s_hat < 0, axis=1).sum()),
    )


@dataclass
class MonteCarloSummary:
    n_trials: int
    t: np.ndarray
    mean_dist: np.ndarray
    ms_dist: np.ndarray
    mean_b: np.ndarray
    ms_b: np.ndarray
    mean_sigma: np.ndarray
    ms_sigma: np.ndarray
    steady_mean_dist: float
    steady_ms_dist: float
    steady_ms_error: float
    per_trial_steady_dist: np.ndarray
    per_trial_min_dist: np.ndarray
    per_trial_steady_ms_error: np.ndarray
    failures: list
    logs: list = field(default_factory=list, repr=False)

    @property
    def n_ok(self) -> int:
        return len(self.per_trial_steady_dist)

    @property
    def steady_sem(self) -> float:
        """Standard error of ``steady_mean_dist`` across trials."""
        x = self.per_trial_steady_dist
        if x.size < 2:
            return float("nan")
        return float(x.std(ddof=1) / math.sqrt(x.size))


def summarize(logs: list, failures: list | None = None) -> MonteCarloSummary:
    failures = failures or []
    if not logs:
        raise NearUnstableSet(f"all {len(failures)} trials failed")
    dist = np.stack([lg.dist_tilde for lg in logs])
    bn = np.stack([np.linalg.norm(lg.b_tilde, axis=1) for lg in logs])
    sn = np.stack([np.linalg.norm(lg.sigma_tilde, axis=1) for lg in logs])
    mask = logs[0].steady_mask()
    err = np.stack([lg.error_sq()[mask] for lg in logs])
    return MonteCarloSummary(
        n_trials=len(logs) + len(failures),
        t=logs[0].t,
        mean_dist=dist.mean(axis=0),
        ms_dist=(dist**2).mean(axis=0),
        mean_b=bn.mean(axis=0),
        ms_b=(bn**2).mean(axis=0),
        mean_sigma=sn.mean(axis=0),
        ms_sigma=(sn**2).mean(axis=0),
        steady_mean_dist=float(dist[:, mask].mean()),
        steady_ms_dist=float((dist[:, mask] ** 2).mean()),
        steady_ms_error=float(err.mean()),
        per_trial_steady_dist=dist[:, mask].mean(axis=1),
        per_trial_min_dist=dist.min(axis=1),
        per_trial_steady_ms_error=err.mean(axis=1),
        failures=failures,
        logs=logs,
    )


def monte_carlo(sc: Scenario, n: int, decimation: int = DEFAULT_DECIMATION, workers: int = 1,
                filter_kind: str | None = None, keep_logs: bool = False) -> MonteCarloSummary:
    """Run ``n`` independent trials and aggregate them.

    Failed trials (``NearUnstableSet``) are recorded in ``failures`` as
    ``(trial, step, message)`` and excluded from the statistics.
    """
    if n < 1:
        raise ConfigError("need at least one trial")

    def one(i):
        try:
            return run(sc, decimation=decimation, trial=i, filter_kind=filter_kind)
        except NearUnstableSet as exc:
            return (i, exc.step, str(exc))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(n)))
    else:
        results = [one(i) for i in range(n)]
    logs = [r for r in results if isinstance(r, TrajectoryLog)]
    failures = [r for r in results if not isinstance(r, TrajectoryLog)]
    summary = summarize(logs, failures)
    if not keep_logs:
        summary.logs = []
    return summary
