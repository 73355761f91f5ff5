import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from qdecay import stats
from qdecay.core import EventKind, ModelParams, QubitState, derive_stream
from qdecay.models import (
    NSM_BETA_ZERO_FLAG,
    NsmOutcome,
    fluctuation_gap_density,
    jump_probability,
    occupation_drop_density,
    occupation_drop_moments,
    qmop_propagate,
    run_decay_ensemble,
    run_nsm_trajectory,
    run_qmop_trajectory,
    run_swf_trajectory,
    sample_fluctuation_gap,
    survival_probability,
    swf_detection_probability,
    unitary_weights,
)

LN2 = math.log(2.0)


def params(model="qmop", gamma=1.0, dt=0.01, t_max=25.0, n_traj=1, seed=0, beta=0.0, **kw):
    return ModelParams(
        gamma=gamma, dt=dt, t_max=t_max, n_traj=n_traj, seed=seed, model=model, beta=beta, **kw
    )


class TestSurvivalAndWeights:
    def test_zero_time(self):
        assert survival_probability(1.0, 0.0) == 1.0

    def test_no_decay_channel(self):
        assert survival_probability(0.0, 5.0) == 1.0

    def test_half_life(self):
        assert survival_probability(1.0, LN2) == pytest.approx(0.5)

    def test_negative_time(self):
        with pytest.raises(ValueError, match="negative time"):
            survival_probability(1.0, -0.1)

    def test_weights_trivial(self):
        assert unitary_weights(1.0, 0.0) == (1.0, 0.0)
        e, c = unitary_weights(1.0, LN2)
        assert e == pytest.approx(0.5) and c == pytest.approx(0.5)

    def test_weights_exponential_oracle(self):
        e, c = unitary_weights(0.3, 2.0)
        assert e == pytest.approx(math.exp(-0.6), abs=1e-15)
        assert c == pytest.approx(1.0 - math.exp(-0.6), abs=1e-15)

    @given(st.floats(0.0, 5.0), st.floats(0.0, 50.0))
    def test_weights_sum_exactly_one(self, gamma, t):
        e, c = unitary_weights(gamma, t)
        assert e + c == 1.0


def _rk4_no_jump_oracle(c1_0, c0_0, gamma, omega0, omega1, t, h=1e-5):
    """Independent oracle: integrate the raw non-Hermitian equations of motion
    with RK4, then normalize at the end."""

    def rhs(y):
        return np.array(
            [-(0.5 * gamma + 1j * omega1) * y[0], -1j * omega0 * y[1]], dtype=complex
        )

    y = np.array([c1_0, c0_0], dtype=complex)
    steps = int(t / h)
    sizes = [h] * steps + [t - steps * h]
    for hh in sizes:
        if hh == 0.0:
            continue
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * hh * k1)
        k3 = rhs(y + 0.5 * hh * k2)
        k4 = rhs(y + hh * k3)
        y = y + (hh / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y / np.linalg.norm(y)


class TestQmopPropagate:
    def test_pure_excited_stays_excited(self):
        p = params()
        for t in (0.1, 1.0, 7.5):
            out = qmop_propagate(QubitState.excited(), p, t)
            assert abs(out.c_excited) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_equal_superposition_at_half_life(self):
        p = params()
        s = QubitState.superposition(1.0, 1.0)
        out = qmop_propagate(s, p, LN2)
        assert abs(out.c_excited) ** 2 == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert abs(out.c_ground) ** 2 == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_against_rk4_oracle(self):
        p = params(omega0=0.4, omega1=1.3)
        s = QubitState.superposition(1.0, 1.0)
        out = qmop_propagate(s, p, LN2)
        ref = _rk4_no_jump_oracle(s.c_excited, s.c_ground, 1.0, 0.4, 1.3, LN2)
        assert abs(out.c_excited - ref[0]) < 1e-6
        assert abs(out.c_ground - ref[1]) < 1e-6

    def test_zero_time_identity(self):
        p = params()
        s = QubitState.superposition(0.3 + 0.1j, 0.8)
        out = qmop_propagate(s, p, 0.0)
        assert out.c_excited == pytest.approx(s.c_excited)
        assert out.c_ground == pytest.approx(s.c_ground)

    def test_norm_kept_along_steps(self):
        p = params()
        s = QubitState.superposition(1.0, 1.0)
        for _ in range(200):
            s = qmop_propagate(s, p, 0.05)
            assert abs(s.c_excited) ** 2 + abs(s.c_ground) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_photon_component_rejected(self):
        p = params()
        with pytest.raises(ValueError, match="photon component"):
            qmop_propagate(QubitState(0.5, 0.5, 0.5), p, 1.0)


class TestJumpProbability:
    def test_pure_excited_time_independent(self):
        p = params()
        s = QubitState.excited()
        for t in (0.0, 1.0, 10.0):
            evolved = qmop_propagate(s, p, t)
            assert jump_probability(evolved, 1.0, 0.01) == pytest.approx(0.01, abs=1e-14)

    def test_pure_ground(self):
        assert jump_probability(QubitState.ground(), 1.0, 0.01) == 0.0

    def test_arithmetic(self):
        s = QubitState(math.sqrt(1.0 / 3.0), math.sqrt(2.0 / 3.0))
        assert jump_probability(s, 1.0, 0.03) == pytest.approx(0.01)

    def test_step_too_large(self):
        with pytest.raises(ValueError, match="step too large"):
            jump_probability(QubitState.excited(), 2.0, 0.1)


class TestQmopTrajectory:
    def test_gamma_zero_never_jumps(self):
        p = params(gamma=0.0, t_max=5.0)
        for i in range(50):
            rec = run_qmop_trajectory(p, derive_stream(1, i))
            assert rec.decay_time is None

    def test_pure_ground_never_jumps(self):
        p = params(t_max=5.0)
        rec = run_qmop_trajectory(p, derive_stream(2, 0), initial_state=QubitState.ground())
        assert rec.decay_time is None
        assert not rec.events

    def test_pre_jump_occupation_is_one(self):
        p = params(t_max=5.0)
        rec = run_qmop_trajectory(p, derive_stream(3, 5), record_steps=True)
        assert rec.decay_time is not None
        k = int(rec.decay_time / p.dt)
        assert np.all(rec.occupation_series[: k + 1] == 1.0)
        assert np.all(rec.occupation_series[k + 1 :] == 0.0)

    def test_decay_times_exponential(self):
        p = params(n_traj=5000, seed=77)
        summary = run_decay_ensemble(p)
        d = stats.ks_distance(summary.observed_decay_times, lambda t: -np.expm1(-t))
        assert d < 2.5 * 1.36 / math.sqrt(p.n_traj)

    def test_single_trajectory_matches_ensemble_path(self):
        p = params(n_traj=20, seed=99)
        summary = run_decay_ensemble(p)
        for i in range(p.n_traj):
            rec = run_qmop_trajectory(p, derive_stream(p.seed, i))
            lhs = math.nan if rec.decay_time is None else rec.decay_time
            assert (
                (math.isnan(lhs) and math.isnan(summary.decay_times[i]))
                or lhs == summary.decay_times[i]
            )

    def test_phases_do_not_change_decay_statistics(self):
        rec_a = run_qmop_trajectory(params(seed=5), derive_stream(5, 3))
        rec_b = run_qmop_trajectory(params(seed=5, omega0=2.0, omega1=5.0), derive_stream(5, 3))
        assert rec_a.decay_time == rec_b.decay_time


class TestSwfTrajectory:
    def test_no_detection_survival_weight(self):
        # n silent steps reduce the surviving weight by exp(-gamma*n*dt) exactly
        gamma, dt, n = 1.0, 0.01, 173
        s = QubitState.excited()
        p_step = swf_detection_probability(s, gamma, dt)
        survival = (1.0 - p_step) ** n
        assert survival == pytest.approx(math.exp(-gamma * n * dt), rel=1e-12)

    def test_detection_probability_scales_with_occupation(self):
        s = QubitState.superposition(1.0, 1.0)
        full = swf_detection_probability(QubitState.excited(), 1.0, 0.01)
        assert swf_detection_probability(s, 1.0, 0.01) == pytest.approx(0.5 * full)

    def test_decay_times_exponential(self):
        p = params(model="swf", n_traj=5000, seed=31)
        summary = run_decay_ensemble(p)
        d = stats.ks_distance(summary.observed_decay_times, lambda t: -np.expm1(-t))
        assert d < 2.5 * 1.36 / math.sqrt(p.n_traj)

    def test_terminal_event_is_photon_detection(self):
        p = params(model="swf", t_max=30.0)
        rec = run_swf_trajectory(p, derive_stream(8, 2))
        assert rec.events[-1].kind is EventKind.PHOTON_DETECTION
        assert rec.events[-1].occupation_after == 0.0

    def test_matches_qmop_mean_occupation_in_continuous_limit(self):
        # dt*gamma = 0.01: binned occupation curves agree within 3 combined SE
        pq = params(n_traj=4000, seed=51, t_max=8.0)
        ps = params(model="swf", n_traj=4000, seed=52, t_max=8.0)
        sq = run_decay_ensemble(pq, bin_steps=40)
        ss = run_decay_ensemble(ps, bin_steps=40)
        se = np.sqrt(sq.occupation_se**2 + ss.occupation_se**2)
        gap = np.abs(sq.occupation_mean - ss.occupation_mean)
        assert np.all(gap <= 3.0 * np.maximum(se, 1e-12))


class _FakeStream:
    """Duck-typed stream yielding a canned uniform sequence."""

    def __init__(self, values):
        self._values = list(values)

    def random(self, size=None):
        if size is None:
            return self._values.pop(0)
        return np.array([self._values.pop(0) for _ in range(size)])


class TestFluctuationGaps:
    def test_mean_matches_rate(self):
        gaps = sample_fluctuation_gap(1.0, derive_stream(4, 0), size=1_000_000)
        assert abs(gaps.mean() - 1.0) < 3.0 / math.sqrt(gaps.size)

    def test_density_at_origin(self):
        beta = 2.0
        gaps = sample_fluctuation_gap(beta, derive_stream(4, 1), size=1_000_000)
        width = 0.01
        density = float((gaps < width).sum()) / (gaps.size * width)
        assert density == pytest.approx(beta, abs=0.06)

    def test_degenerate_draw_resampled(self):
        gap = sample_fluctuation_gap(1.0, _FakeStream([0.0, 0.5]))
        assert gap == pytest.approx(-math.log(0.5))

    def test_non_positive_rate(self):
        with pytest.raises(ValueError, match="non-positive rate"):
            sample_fluctuation_gap(0.0, derive_stream(4, 2))


class TestGapAndDropDensities:
    def test_gap_density_values(self):
        assert fluctuation_gap_density(1.0, 0.0) == 1.0
        assert fluctuation_gap_density(1.0, -1.0) == pytest.approx(math.exp(-1.0))

    def test_gap_density_normalized(self):
        val, _ = quad(lambda tau: fluctuation_gap_density(1.7, tau), -60.0, 0.0)
        assert val == pytest.approx(1.0, abs=1e-9)

    def test_gap_density_rejects_positive_tau(self):
        with pytest.raises(ValueError, match="positive tau"):
            fluctuation_gap_density(1.0, 0.5)

    def test_drop_density_uniform_at_r_one(self):
        for a in (0.0, 0.2, 0.5, 0.99):
            assert occupation_drop_density(1.0, a) == 1.0

    def test_drop_density_at_zero(self):
        assert occupation_drop_density(2.0, 0.0) == 2.0

    @pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 10.0])
    def test_drop_density_normalized(self, r):
        val, _ = quad(lambda a: occupation_drop_density(r, a), 0.0, 1.0)
        assert val == pytest.approx(1.0, abs=1e-9)

    def test_drop_density_range(self):
        with pytest.raises(ValueError, match="out of range"):
            occupation_drop_density(1.0, 1.0)

    def test_pushforward_of_gap_density_is_drop_density(self):
        # change of variables a = 1 - exp(gamma*tau) for tau <= 0
        gamma, beta = 0.7, 1.3
        r = beta / gamma
        for a in np.linspace(1e-6, 1 - 1e-6, 500):
            tau = math.log(1.0 - a) / gamma
            jac = 1.0 / (gamma * (1.0 - a))
            via_gap = fluctuation_gap_density(beta, tau) * jac
            assert abs(via_gap - occupation_drop_density(r, a)) < 1e-8


class TestDropMoments:
    def test_beta_zero(self):
        m = occupation_drop_moments(1.0, 0.0)
        assert (m.mean_a, m.std_a) == (1.0, 0.0)

    def test_r_one(self):
        m = occupation_drop_moments(1.0, 1.0)
        assert m.mean_a == pytest.approx(0.5)
        assert m.std_a == pytest.approx(0.5 * math.sqrt(1.0 / 3.0))
        assert m.std_a == pytest.approx(0.288675, abs=1e-6)

    def test_large_beta_limit(self):
        m = occupation_drop_moments(1.0, 1e9)
        assert m.mean_a < 1e-8 and m.std_a < 1e-8

    @pytest.mark.parametrize("r", [0.25, 1.0, 3.0])
    def test_against_quadrature_oracle(self, r):
        mean, _ = quad(lambda a: a * occupation_drop_density(r, a), 0.0, 1.0)
        second, _ = quad(lambda a: a * a * occupation_drop_density(r, a), 0.0, 1.0)
        m = occupation_drop_moments(1.0, r)
        assert m.mean_a == pytest.approx(mean, abs=1e-9)
        assert m.std_a == pytest.approx(math.sqrt(second - mean**2), abs=1e-8)

    def test_non_positive_gamma(self):
        with pytest.raises(ValueError, match="non-positive gamma"):
            occupation_drop_moments(0.0, 1.0)


class TestNsmTrajectory:
    def test_forced_grid_product_law(self):
        # fluctuations forced onto the step grid: survival through n of them
        # telescopes to exp(-gamma*n*dt)
        dt = 0.05
        grid = [k * dt for k in range(1, 401)]
        p = params(model="nsm", beta=1.0, dt=dt, t_max=20.0)
        n_check = 10
        survived = 0
        total = 400
        for i in range(total):
            rec = run_nsm_trajectory(p, derive_stream(21, i), fluctuation_times=grid)
            events = rec.nsm_events
            n_resets = sum(
                1 for ev in events[:n_check] if ev.outcome is NsmOutcome.RESET_TO_EXCITED
            )
            if n_resets == min(n_check, len(events)):
                survived += 1
            for ev in events:
                assert ev.a_before == pytest.approx(-math.expm1(-p.gamma * dt), abs=1e-12)
        expect = math.exp(-p.gamma * n_check * dt)
        sigma = math.sqrt(expect * (1 - expect) / total)
        assert abs(survived / total - expect) < 4 * sigma

    def test_occupation_drop_matches_gap(self):
        p = params(model="nsm", beta=2.0, t_max=60.0)
        rec = run_nsm_trajectory(p, derive_stream(22, 4))
        for ev in rec.nsm_events:
            assert ev.a_before == pytest.approx(-math.expm1(-p.gamma * ev.gap), abs=1e-12)
            assert ev.gap > 0.0

    def test_terminal_event_ends_trajectory(self):
        p = params(model="nsm", beta=1.0, t_max=200.0)
        rec = run_nsm_trajectory(p, derive_stream(23, 1))
        assert rec.decay_time is not None
        assert rec.events[-1].kind is EventKind.QUANTUM_JUMP
        # the attributed emission time lies inside the terminal gap
        last = rec.nsm_events[-1]
        assert last.t - last.gap < rec.decay_time <= last.t

    def test_record_steps_with_terminal_jump(self):
        # step events stop at the jump; the series zeroes from there on
        p = params(model="nsm", beta=1.0, t_max=30.0)
        rec = run_nsm_trajectory(p, derive_stream(25, 2), record_steps=True)
        assert rec.decay_time is not None
        jump_t = rec.events[-1].t
        assert rec.events[-1].kind is EventKind.QUANTUM_JUMP
        assert all(ev.t <= jump_t for ev in rec.events)
        assert np.all(rec.occupation_series[np.arange(p.n_steps + 1) * p.dt >= jump_t] == 0.0)

    def test_beta_zero_degenerate_limit(self):
        p = params(model="nsm", beta=0.0, t_max=5.0)
        rec = run_nsm_trajectory(p, derive_stream(24, 0), record_steps=True)
        assert rec.decay_time is None
        assert NSM_BETA_ZERO_FLAG in rec.flags
        grid = np.arange(p.n_steps + 1) * p.dt
        assert np.allclose(rec.occupation_series, np.exp(-grid), atol=1e-12)

    def test_decay_times_exponential_for_all_beta(self):
        for beta, t_max in ((0.2, 300.0), (5.0, 40.0)):
            p = params(model="nsm", beta=beta, t_max=t_max, n_traj=4000, seed=91)
            summary = run_decay_ensemble(p)
            assert summary.n_censored == 0
            d = stats.ks_distance(summary.observed_decay_times, lambda t: -np.expm1(-t))
            assert d < 2.5 * 1.36 / math.sqrt(p.n_traj)

    def test_drop_samples_match_analytic_moments(self):
        p = params(model="nsm", beta=1.0, t_max=80.0, n_traj=8000, seed=13)
        summary = run_decay_ensemble(p)
        mean, var, se = stats.mean_var_se(summary.drop_samples)
        analytic = occupation_drop_moments(p.gamma, p.beta)
        assert abs(mean - analytic.mean_a) < 3 * se

    def test_terminal_drops_are_size_biased(self):
        # a fluctuation ends the trajectory with probability equal to its own
        # drop, so terminal drops follow (1+r) a r (1-a)^(r-1); this pins the
        # coupling between the outcome draw and the gap draw
        from scipy.stats import chi2 as chi2_dist

        r = 1.0
        p = params(model="nsm", beta=r, t_max=80.0, n_traj=30000, seed=37)
        s = run_decay_ensemble(p)
        term = s.drop_samples[s.drop_terminal]
        assert term.size == p.n_traj - s.n_censored
        counts, edges = np.histogram(term, bins=20, range=(0.0, 1.0))

        def cdf(a):  # integral of (1+r) r a (1-a)^(r-1) for r = 1 is a^2
            return a**2

        expected = term.size * (cdf(edges[1:]) - cdf(edges[:-1]))
        x2 = float(np.sum((counts - expected) ** 2 / expected))
        assert x2 < chi2_dist.ppf(0.99, 19)

    def test_wrong_model_rejected(self):
        with pytest.raises(ValueError, match="model=nsm"):
            run_nsm_trajectory(params(model="qmop"), derive_stream(0, 0))

    @pytest.mark.parametrize("beta", [0.3, 3.0])
    def test_ensemble_mean_occupation_is_exponential(self, beta):
        # survival weight times the between-fluctuation sag telescopes to
        # exp(-gamma t) exactly, for every fluctuation rate; the target is
        # binned over the same step grid as the recorded series
        p = params(model="nsm", beta=beta, t_max=8.0, n_traj=3000, seed=71)
        bin_steps = 40
        s = run_decay_ensemble(p, bin_steps=bin_steps)
        grid = np.arange(p.n_steps) * p.dt
        target = np.exp(-p.gamma * grid).reshape(-1, bin_steps).mean(axis=1)
        z = np.abs(s.occupation_mean - target) / np.maximum(s.occupation_se, 1e-300)
        assert np.all(z <= 3.5)


class TestEnsembleDeterminism:
    @pytest.mark.parametrize("model,beta", [("qmop", 0.0), ("swf", 0.0), ("nsm", 1.5)])
    def test_thread_count_does_not_change_results(self, model, beta):
        p = params(model=model, beta=beta, t_max=40.0, n_traj=600, seed=1234)
        base = run_decay_ensemble(p, threads=1)
        for threads in (3, 8):
            other = run_decay_ensemble(p, threads=threads)
            assert np.array_equal(base.decay_times, other.decay_times, equal_nan=True)
            assert np.array_equal(base.events.t, other.events.t)
            assert base.events.kind == other.events.kind
