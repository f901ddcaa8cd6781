"""Scenario files: flat ``dotted.key = value`` text.

One assignment per line, ``#`` starts a comment. Values are JSON literals
(numbers, lists, quoted strings) or bare words. Keys that are absent keep
the built-in reference values; unknown keys are rejected. Example::

    sim.duration = 10.0
    sim.dt = 0.001
    sim.filter = stochastic
    gyro.q = [0.2, 0.2, 0.2]
    init.r_hat.angle_deg = 179
    init.r_hat.axis = [1, 5, 3]

Attitudes may be given either as a full matrix (``init.r_true = [[...]]``)
or as ``.angle_deg`` plus ``.axis`` (the axis is normalized on load).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dynamics import GyroModel
from .errors import ConfigError
from .estimator import FilterGains
from .measurement import ReferenceVectorSet
from .sim import Scenario, paper_scenario
from .so3 import from_angle_axis

KEYS = (
    "sim.duration", "sim.dt", "sim.seed", "sim.filter", "sim.noise_mode",
    "omega.kind", "omega.value",
    "gyro.bias", "gyro.q",
    "refs.inertial", "refs.body_bias", "refs.noise_std", "refs.weights",
    "init.r_true", "init.r_true.angle_deg", "init.r_true.axis",
    "init.r_hat", "init.r_hat.angle_deg", "init.r_hat.axis",
    "init.b_hat", "init.sigma_hat",
    "gains.k_w", "gains.k_b", "gains.k_sigma", "gains.gamma", "gains.epsilon",
)


def parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = parse_value(val)
    return values


def _attitude(values, prefix, default):
    if prefix in values:
        return np.array(values[prefix], dtype=float)
    angle = values.get(prefix + ".angle_deg")
    axis = values.get(prefix + ".axis")
    if angle is None and axis is None:
        return default
    if angle is None or axis is None:
        raise ConfigError(f"{prefix}: give both angle_deg and axis")
    axis = np.array(axis, dtype=float)
    return from_angle_axis(np.deg2rad(float(angle)), axis / np.linalg.norm(axis))


def apply_values(base: Scenario, values: dict) -> Scenario:
    """Layer parsed key/value pairs over ``base``."""
    unknown = set(values) - set(KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    g = values.get
    try:
        gyro = GyroModel(g("gyro.bias", base.gyro.bias), g("gyro.q", base.gyro.q_diag))
        refs = ReferenceVectorSet(
            g("refs.inertial", base.refs.v_inertial),
            g("refs.body_bias", base.refs.bias_body),
            g("refs.noise_std", base.refs.noise_std),
            g("refs.weights", base.refs.weights),
        )
        gains = FilterGains(
            k_w=float(g("gains.k_w", base.gains.k_w)),
            k_b=float(g("gains.k_b", base.gains.k_b)),
            k_sigma=float(g("gains.k_sigma", base.gains.k_sigma)),
            gamma=float(g("gains.gamma", base.gains.gamma)),
            epsilon=float(g("gains.epsilon", base.gains.epsilon)),
        )
        seed = g("sim.seed", base.seed)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("sim.seed must be an integer")
        return base.with_overrides(
            duration=float(g("sim.duration", base.duration)),
            dt=float(g("sim.dt", base.dt)),
            seed=seed,
            filter_kind=str(g("sim.filter", base.filter_kind)),
            noise_mode=str(g("sim.noise_mode", base.noise_mode)),
            omega_kind=str(g("omega.kind", base.omega_kind)),
            omega_value=tuple(float(x) for x in g("omega.value", base.omega_value)),
            gyro=gyro,
            refs=refs,
            gains=gains,
            r0_true=_attitude(values, "init.r_true", base.r0_true),
            r0_hat=_attitude(values, "init.r_hat", base.r0_hat),
            b_hat0=np.array(g("init.b_hat", base.b_hat0), dtype=float).reshape(3),
            sigma_hat0=np.array(g("init.sigma_hat", base.sigma_hat0), dtype=float).reshape(3),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    return apply_values(paper_scenario(), parse_text(text))


def _fmt(x):
    if isinstance(x, np.ndarray):
        x = x.tolist()
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, str):
        return x
    return json.dumps(x)


def scenario_values(sc: Scenario) -> dict:
    return {
        "sim.duration": float(sc.duration),
        "sim.dt": float(sc.dt),
        "sim.seed": int(sc.seed),
        "sim.filter": sc.filter_kind,
        "sim.noise_mode": sc.noise_mode,
        "omega.kind": sc.omega_kind,
        "omega.value": [float(v) for v in sc.omega_value],
        "gyro.bias": sc.gyro.bias,
        "gyro.q": sc.gyro.q_diag,
        "refs.inertial": sc.refs.v_inertial,
        "refs.body_bias": sc.refs.bias_body,
        "refs.noise_std": sc.refs.noise_std,
        "refs.weights": sc.refs.weights,
        "init.r_true": np.asarray(sc.r0_true),
        "init.r_hat": np.asarray(sc.r0_hat),
        "init.b_hat": np.asarray(sc.b_hat0, dtype=float),
        "init.sigma_hat": np.asarray(sc.sigma_hat0, dtype=float),
        "gains.k_w": sc.gains.k_w,
        "gains.k_b": sc.gains.k_b,
        "gains.k_sigma": sc.gains.k_sigma,
        "gains.gamma": sc.gains.gamma,
        "gains.epsilon": sc.gains.epsilon,
    }


def dump_scenario(sc: Scenario) -> str:
    """Canonical text form; ``load`` of it reproduces the scenario exactly."""
    lines = ["# so3filter scenario"]
    lines += [f"{k} = {_fmt(v)}" for k, v in scenario_values(sc).items()]
    if sc.gyro.q_schedule is not None:
        lines.append("# gyro.q overridden by a time-varying schedule (not serializable)")
    return "\n".join(lines) + "\n"
