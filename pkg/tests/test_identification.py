import numpy as np
import pytest

from varinertia.errors import InsufficientExcitationError, NoDataError, ParameterError
from varinertia.identification import (
    GsSeries,
    ModalTrajectory,
    compute_g_s,
    estimate_stiffness,
    identify_forcevib,
    identify_forcevibmod,
    orthogonal_objective,
    stitch_backbone,
    trim_transients,
)
from varinertia.pipeline import PipelineConfig, identify
from varinertia.scenario import load_scenario, simulate_scenario
from varinertia.signal_core import TimeSeries, make_analytic

FS = 2000.0


@pytest.fixture(scope="module")
def linear_run():
    sim = simulate_scenario(load_scenario("linear"))
    res = identify(sim.excitation, sim.response, PipelineConfig(use_hvd=False))
    return sim, res


@pytest.fixture(scope="module")
def table2_run():
    sim = simulate_scenario(load_scenario("table2"))
    res = identify(sim.excitation, sim.response, PipelineConfig(use_hvd=False))
    return sim, res


def free_records(w=150.0, n=8000):
    t = np.arange(n) / FS
    y = make_analytic(TimeSeries(0.0, 1 / FS, np.cos(w * t)))
    x = make_analytic(TimeSeries(0.0, 1 / FS, np.zeros(n)))
    return x, y


def trajectory(amplitude, omega_n, valid=None):
    amplitude = np.asarray(amplitude, dtype=float)
    omega_n = np.asarray(omega_n, dtype=float)
    T2 = 1 / omega_n ** 2
    valid = np.ones(amplitude.size, bool) if valid is None else valid
    return ModalTrajectory(t=np.arange(amplitude.size) / FS, amplitude=amplitude, T2=T2,
                           chi=0.1 * T2, omega_n=omega_n, h=np.full(amplitude.size, 0.1), valid=valid)


class TestGs:
    def test_free_response_sits_on_the_g_axis(self):
        w = 150.0
        x, y = free_records(w)
        gs = compute_g_s(x, y)
        ok = gs.valid
        assert ok.sum() > 0.7 * ok.size
        assert np.allclose(gs.g[ok], 1 / w ** 2, rtol=0.01)
        assert np.all(gs.s[ok] == 0.0)
        assert gs.omega_ref == pytest.approx(w, rel=1e-3)

    def test_silent_response_is_masked(self):
        x, _ = free_records()
        n = len(x.base)
        rng = np.random.default_rng(0)
        y = make_analytic(TimeSeries(0.0, 1 / FS, 1e-3 * np.cos(150 * np.arange(n) / FS)
                                     * (np.arange(n) < n // 2) + 1e-12 * rng.standard_normal(n)))
        gs = compute_g_s(x, y)
        assert not np.any(gs.valid[3 * n // 4:])


def exact_line_series(k=1000.0, windows=6, length=50):
    # per-window constant T^2 with s varying: g = T^2 - s / k exactly
    rng = np.random.default_rng(3)
    s = rng.uniform(-1, 1, windows * length)
    T2 = np.repeat(rng.uniform(0.5, 2.0, windows), length)
    n = s.size
    return GsSeries(g=T2 - s / k, s=s, denominator=np.ones(n), valid=np.ones(n, bool),
                    dt=1e-3, omega_ref=1.0), length


class TestStiffness:
    def test_exact_line_recovers_k(self):
        gs, length = exact_line_series()
        fit = estimate_stiffness(gs, window_length=length)
        assert fit.k == pytest.approx(1000.0, rel=1e-9)
        assert fit.window_count == 6 and fit.objective < 1e-20

    def test_objective_is_perpendicular_distance(self):
        s = np.array([1.0, -1.0])
        g = np.array([0.0, 0.0])
        # distance of (1, 0) to g = -s is 1/sqrt(2)
        assert orthogonal_objective(1.0, s, g) == pytest.approx(1.0)

    def test_constant_s_is_insufficient(self):
        n = 300
        gs = GsSeries(g=np.full(n, 1e-4), s=np.zeros(n), denominator=np.ones(n),
                      valid=np.ones(n, bool), dt=1e-3, omega_ref=100.0)
        with pytest.raises(InsufficientExcitationError, match="swept"):
            estimate_stiffness(gs, window_length=50)

    def test_free_response_is_insufficient(self):
        x, y = free_records()
        with pytest.raises(InsufficientExcitationError):
            estimate_stiffness(compute_g_s(x, y))

    def test_parameter_checks(self):
        gs, _ = exact_line_series()
        with pytest.raises(ParameterError):
            estimate_stiffness(gs, window_length=2)
        with pytest.raises(ParameterError):
            estimate_stiffness(gs, window_length=50, drift_tol=0.0)

    def test_table2_stiffness(self, table2_run):
        _, res = table2_run
        assert res.k == pytest.approx((2 * np.pi * 30) ** 2, rel=0.01)
        assert res.fit.window_count >= 2
        assert res.fit.window_count <= res.fit.windows_considered


class TestModal:
    def test_nonpositive_constants(self):
        x, y = free_records()
        with pytest.raises(ParameterError):
            identify_forcevibmod(x, y, 0.0)
        with pytest.raises(ParameterError):
            identify_forcevib(x, y, -1.0)

    def test_undamped_free_response(self):
        w = 150.0
        x, y = free_records(w)
        traj = identify_forcevibmod(x, y, 1e4)
        v = traj.valid
        assert np.allclose(traj.omega_n[v], w, rtol=0.01)
        assert np.max(np.abs(traj.chi[v])) * w ** 2 < 0.01 * w

    def test_linear_benchmark(self, linear_run):
        sim, res = linear_run
        k_true = (2 * np.pi * 30) ** 2
        assert res.k == pytest.approx(k_true, rel=0.01)
        a, w, h = res.trajectory.selected()
        assert a.size > 0.5 * len(res.trajectory)
        assert np.median(w) == pytest.approx(np.sqrt(k_true), rel=0.005)
        assert np.median(h) == pytest.approx(10.0, rel=0.1)
        # the fitted m = k T^2 is constant for a constant-inertia system
        m = res.k * res.trajectory.T2[res.trajectory.valid]
        assert np.percentile(np.abs(m - 1.0), 90) < 0.01

    def test_two_routes_agree_on_linear_system(self, linear_run):
        _, res = linear_run
        mod = identify_forcevibmod(res.excitation, res.response, res.k)
        plain = identify_forcevib(res.excitation, res.response, 1.0)
        v = mod.valid & plain.valid & res.trajectory.valid
        assert np.max(np.abs(mod.omega_n[v] / plain.omega_n[v] - 1)) < 0.01
        assert np.median(np.abs(mod.h[v] / plain.h[v] - 1)) < 0.01

    def test_modal_identities(self, table2_run):
        _, res = table2_run
        tr = res.trajectory
        v = tr.valid
        assert np.allclose(tr.omega_n[v] ** 2 * tr.T2[v], 1.0, rtol=1e-12)
        assert np.allclose(tr.h[v] * tr.T2[v], tr.chi[v], rtol=1e-12, atol=0)

    def test_frequency_drops_with_amplitude(self, table2_run):
        _, res = table2_run
        curve = stitch_backbone([res.trajectory], bins=20)
        assert curve.omega_n[-1] < curve.omega_n[0]

    def test_scaling_both_channels_leaves_estimates_unchanged(self, table2_run):
        sim, res = table2_run
        cfg = PipelineConfig(use_hvd=False)
        scaled = identify(sim.excitation.with_samples(3 * sim.excitation.samples),
                          sim.response.with_samples(3 * sim.response.samples), cfg, res.k)
        v = res.trajectory.valid
        assert np.allclose(scaled.trajectory.omega_n[v], res.trajectory.omega_n[v], rtol=1e-9)

    def test_scaling_excitation_scales_stiffness(self, table2_run):
        sim, res = table2_run
        scaled = identify(sim.excitation.with_samples(2 * sim.excitation.samples), sim.response,
                          PipelineConfig(use_hvd=False))
        assert scaled.k == pytest.approx(2 * res.k, rel=1e-6)


class TestTrim:
    def test_steady_amplitude_is_kept(self):
        traj = trajectory(np.full(100, 2.0), np.full(100, 100.0))
        assert trim_transients(traj).valid.all()

    def test_fast_growth_is_removed(self):
        amp = np.full(100, 1.0)
        amp[50:] = np.exp(np.arange(50) * 0.5)
        out = trim_transients(trajectory(amp, np.full(100, 100.0)))
        assert out.valid[:45].all() and not out.valid[55:].any()

    def test_explicit_threshold_and_no_valid_samples(self):
        amp = 1 + 0.01 * np.arange(100)
        traj = trajectory(amp, np.full(100, 100.0))
        assert not trim_transients(traj, rate_threshold=1e-3).valid.any()
        empty = trajectory(amp, np.full(100, 100.0), valid=np.zeros(100, bool))
        assert trim_transients(empty) is empty


class TestStitch:
    def test_single_run_is_a_binned_copy(self):
        a = np.linspace(1, 2, 400)
        curve = stitch_backbone([trajectory(a, 100 - a)], bins=10, log_bins=False)
        assert curve.amplitude.size == 10
        assert np.allclose(curve.omega_n, 100 - curve.amplitude, atol=1e-9)
        assert curve.n_samples.sum() == 400

    def test_unbinned_is_sorted(self):
        a = np.array([3.0, 1.0, 2.0])
        curve = stitch_backbone([trajectory(a, 10 + a)], bins=None)
        assert list(curve.amplitude) == [1.0, 2.0, 3.0]
        assert list(curve.omega_n) == [11.0, 12.0, 13.0]

    def test_disjoint_runs_leave_a_gap(self):
        lo = trajectory(np.linspace(1, 2, 200), np.full(200, 50.0))
        hi = trajectory(np.linspace(10, 20, 200), np.full(200, 60.0))
        curve = stitch_backbone([lo, hi], bins=30)
        assert not np.any((curve.amplitude > 2.01) & (curve.amplitude < 9.99))
        assert set(curve.source_run_ids) == {(0,), (1,)}

    def test_overlap_is_count_weighted(self):
        a = trajectory(np.full(90, 1.5), np.full(90, 100.0))
        b = trajectory(np.full(10, 1.5), np.full(10, 110.0))
        curve = stitch_backbone([a, b], bins=1)
        assert curve.omega_n[0] == pytest.approx(101.0)

    def test_no_data(self):
        with pytest.raises(NoDataError):
            stitch_backbone([])
        empty = trajectory(np.ones(10), np.ones(10), valid=np.zeros(10, bool))
        with pytest.raises(NoDataError):
            stitch_backbone([empty])
