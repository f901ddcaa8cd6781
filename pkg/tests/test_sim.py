import math

import numpy as np
import pytest

from so3filter import sim, so3
from so3filter.errors import ConfigError, NearUnstableSet
from so3filter.estimator import FilterGains


@pytest.fixture(scope="module")
def paper():
    return sim.paper_scenario()


@pytest.fixture(scope="module")
def short(paper):
    return paper.with_overrides(duration=2.0)


# ---------------------------------------------------------------- scenario

def test_paper_constants(paper):
    np.testing.assert_allclose(paper.gyro.bias, [0.2, -0.2, 0.2])
    np.testing.assert_allclose(paper.gyro.q_diag, [0.2, 0.2, 0.2])
    g = paper.gains
    assert (g.k_w, g.k_b, g.k_sigma, g.gamma, g.epsilon) == (5, 0.5, 0.5, 1, 0.5)
    np.testing.assert_array_equal(paper.r0_true, np.eye(3))
    assert so3.ecl_dist(paper.r0_true @ paper.r0_hat.T) == pytest.approx(0.9999, abs=5e-4)
    assert (paper.duration, paper.dt, paper.n_steps) == (10.0, 1e-3, 10_000)
    np.testing.assert_allclose(paper.refs.v_inertial[0], np.array([1, -1, 1]) / np.sqrt(3))
    np.testing.assert_allclose(paper.refs.bias_body, [[-0.1, 0.1, 0.05], [0, 0, 0.1]])
    np.testing.assert_array_equal(paper.refs.noise_std, [0.2, 0.2])


@pytest.mark.parametrize("changes", [
    dict(dt=-1.0), dict(dt=0.0), dict(dt=float("nan")), dict(duration=1e-4),
    dict(filter_kind="kalman"), dict(seed=-3), dict(noise_mode="both"), dict(omega_kind="random"),
    dict(r0_hat=2 * np.eye(3)),
])
def test_scenario_validation(paper, changes):
    with pytest.raises(ConfigError):
        paper.with_overrides(**changes)


@pytest.mark.parametrize("duration, dt, steps", [(1.0, 1e-3, 1000), (0.0105, 1e-3, 11), (0.3, 0.1, 3)])
def test_step_count(paper, duration, dt, steps):
    assert paper.with_overrides(duration=duration, dt=dt).n_steps == steps


def test_config_hash_tracks_content(paper):
    assert paper.config_hash() == sim.paper_scenario().config_hash()
    assert paper.config_hash() != paper.with_overrides(seed=1).config_hash()
    assert len(paper.config_hash()) == 16


def test_trial_streams_are_distinct():
    a = sim.trial_rng(7, 0).standard_normal(4)
    b = sim.trial_rng(7, 1).standard_normal(4)
    c = sim.trial_rng(7).standard_normal(4)
    assert not np.allclose(a, b) and not np.allclose(a, c)
    np.testing.assert_array_equal(a, sim.trial_rng(7, 0).standard_normal(4))


# ---------------------------------------------------------------- single run

@pytest.mark.parametrize("decimation", [1, 10, 7])
def test_log_shape(short, decimation):
    log = sim.run(short, decimation=decimation)
    assert len(log) == math.ceil(short.n_steps / decimation)
    assert np.all(np.diff(log.t) > 0)
    assert log.b_hat.shape == (len(log), 3)
    assert log.euler_true.shape == (len(log), 3)
    assert log.seed == short.seed and log.config_hash == short.config_hash()
    assert np.all(log.v_potential >= 0)


def test_log_rejects_bad_decimation(short):
    with pytest.raises(ConfigError):
        sim.run(short, decimation=0)


def test_run_is_deterministic(short):
    a, b = sim.run(short), sim.run(short)
    for name in ("dist_tilde", "dist_weighted", "upsilon", "b_hat", "sigma_hat", "euler_hat", "v_potential"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    c = sim.run(short.with_overrides(seed=1))
    assert not np.array_equal(a.dist_tilde, c.dist_tilde)


def test_initial_record(paper):
    log = sim.run(paper.with_overrides(duration=0.01))
    assert log.t[0] == 0.0
    assert log.dist_tilde[0] == pytest.approx(0.9999, abs=5e-4)
    np.testing.assert_array_equal(log.b_hat[0], np.zeros(3))
    np.testing.assert_allclose(log.b_tilde[0], paper.gyro.bias)
    np.testing.assert_allclose(log.sigma_tilde[0], [0.04] * 3)


def test_potential_matches_components(short):
    log = sim.run(short)
    raw = sim.simulate(short)
    idx = np.arange(0, short.n_steps, 10)
    r_tilde = raw.truth[idx] @ np.swapaxes(raw.r_hat[idx], 1, 2)
    rho = so3.to_rodriguez(r_tilde)
    m_bar = raw.mats.m_bar
    att = (np.einsum("ni,ij,nj->n", rho, m_bar, rho) / (1 + np.sum(rho**2, axis=1))) ** 2 / 4
    expected = att + (np.sum(log.b_tilde**2, axis=1) + np.sum(log.sigma_tilde**2, axis=1)) / 2
    np.testing.assert_allclose(log.v_potential, expected, rtol=1e-9, atol=1e-14)


def test_noise_free_convergence(paper):
    sc = sim.noise_free(paper).with_overrides(r0_hat=so3.from_angle_axis(np.arccos(1 - 1.8), np.array([1.0, 0, 0])))
    log = sim.run(sc)
    assert log.dist_tilde[0] == pytest.approx(0.9)
    assert log.dist_tilde[-1] < 1e-3
    assert np.linalg.norm(log.b_tilde[-1]) < 1e-3


def test_dt_refinement(paper):
    sc = sim.noise_free(paper)
    coarse = sim.run(sc, decimation=1)
    fine = sim.run(sc.with_overrides(dt=sc.dt / 2), decimation=1)
    assert abs(coarse.dist_tilde[-1] - fine.dist_tilde[-1]) < 1e-4


def test_exact_half_turn_aborts(paper):
    sc = sim.noise_free(paper).with_overrides(r0_hat=so3.rot_z(np.pi))
    with pytest.raises(NearUnstableSet) as info:
        sim.run(sc)
    assert info.value.step == 0


def test_process_noise_mode_runs(short):
    log = sim.run(short.with_overrides(noise_mode="process"))
    assert np.all(np.isfinite(log.dist_tilde))
    assert log.dist_tilde[-1] < 0.05


def test_baseline_kind(short):
    log = sim.run(short, filter_kind="baseline")
    assert log.filter_kind == "baseline"
    np.testing.assert_array_equal(log.sigma_hat, 0)


def test_constant_omega(short):
    sc = sim.noise_free(short).with_overrides(omega_kind="constant", omega_value=(0.0, 0.0, 0.5),
                                              r0_hat=np.eye(3))
    log = sim.run(sc, decimation=1)
    np.testing.assert_allclose(log.euler_true[:, 0], 0.5 * log.t, atol=1e-9)
    np.testing.assert_allclose(log.dist_tilde, 0, atol=1e-12)


# ---------------------------------------------------------------- Monte Carlo

def test_single_trial_summary(short):
    summary = sim.monte_carlo(short, 1, keep_logs=True)
    log = sim.run(short, trial=0)
    assert summary.n_trials == 1 and summary.n_ok == 1
    np.testing.assert_array_equal(summary.mean_dist, log.dist_tilde)
    assert summary.steady_mean_dist == pytest.approx(log.steady_mean_dist(), rel=1e-15)
    assert math.isnan(summary.steady_sem)


def test_monte_carlo_rejects_zero(short):
    with pytest.raises(ConfigError):
        sim.monte_carlo(short, 0)


def test_workers_do_not_change_results(short):
    a = sim.monte_carlo(short, 4)
    b = sim.monte_carlo(short, 4, workers=3)
    np.testing.assert_array_equal(a.per_trial_steady_dist, b.per_trial_steady_dist)


def test_failures_are_recorded(short, monkeypatch):
    real_run = sim.run

    def flaky(sc, decimation=10, trial=None, filter_kind=None):
        if trial == 1:
            raise NearUnstableSet("forced", step=42)
        return real_run(sc, decimation=decimation, trial=trial, filter_kind=filter_kind)

    monkeypatch.setattr(sim, "run", flaky)
    summary = sim.monte_carlo(short, 3)
    assert summary.n_trials == 3 and summary.n_ok == 2
    assert summary.failures == [(1, 42, "forced")]


def test_standard_error_scaling(paper):
    """Quadrupling the number of trials halves the standard error."""
    sc = paper.with_overrides(duration=5.0)
    small = sim.monte_carlo(sc.with_overrides(seed=11), 16)
    large = sim.monte_carlo(sc.with_overrides(seed=12), 64)
    ratio = small.steady_sem / large.steady_sem
    # the SEM estimate from 16 trials carries ~18% relative noise
    assert 1.4 < ratio < 2.8


def _steady_ms(sc, n):
    s = sim.monte_carlo(sc, n)
    x = s.per_trial_steady_ms_error
    return s.steady_ms_error, x.std(ddof=1) / math.sqrt(x.size)


def test_steady_mean_square_finite(paper):
    ms, se = _steady_ms(paper.with_overrides(duration=5.0), 10)
    assert np.isfinite(ms) and np.isfinite(se) and ms < 1.0


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="a larger k_w amplifies vector noise and slows bias learning; "
                                       "the steady mean-square error grows (see decisions ledger)")
def test_gain_increase_does_not_raise_error(paper):
    ms5, se5 = _steady_ms(paper, 30)
    ms10, se10 = _steady_ms(paper.with_overrides(gains=FilterGains(k_w=10.0)), 30)
    assert ms10 <= ms5 + 2 * math.hypot(se5, se10)
