"""Nonlinear explicit stochastic attitude filter on SO(3).

Submodules:

- :mod:`so3filter.so3` maps, operators and distances on SO(3)
- :mod:`so3filter.measurement` vector measurement model
- :mod:`so3filter.dynamics` true attitude and gyro synthesis
- :mod:`so3filter.estimator` the stochastic filter and a deterministic baseline
- :mod:`so3filter.sim` scenarios, runs and Monte Carlo
- :mod:`so3filter.cli` command-line interface
"""

from ._accel import JIT_ENABLED
from .estimator import FilterGains, FilterState, baseline_step, filter_step
from .sim import Scenario, TrajectoryLog, monte_carlo, paper_scenario, run

__version__ = "0.1.0"

__all__ = [
    "JIT_ENABLED",
    "FilterGains",
    "FilterState",
    "Scenario",
    "TrajectoryLog",
    "baseline_step",
    "filter_step",
    "monte_carlo",
    "paper_scenario",
    "run",
]
