import math

import numpy as np
import pytest

from varinertia.errors import AlignmentError, ParameterError, TooShortError
from varinertia.pipeline import (
    PipelineConfig,
    amplitude_bins,
    binned_median,
    identify,
    noise_study,
    trial_seed,
)
from varinertia.scenario import load_scenario, simulate_scenario
from varinertia.signal_core import HVD_SETTLE_CYCLES, HvdConfig, TimeSeries, hvd_largest_component


@pytest.fixture(scope="module")
def short_record():
    sc = load_scenario("table2", {"excitation.duration": "4", "excitation.f2": "40"})
    sim = simulate_scenario(sc)
    return sim.excitation, sim.response


@pytest.fixture(scope="module")
def clean_k(short_record):
    return identify(*short_record).k


def test_config_validation():
    with pytest.raises(ParameterError):
        PipelineConfig(window_length=0)
    with pytest.raises(ParameterError):
        PipelineConfig(drift_tol=-1.0)
    with pytest.raises(ParameterError):
        PipelineConfig(amplitude_order=3)


def test_identify_rejects_misaligned_channels(short_record):
    x, y = short_record
    with pytest.raises(AlignmentError):
        identify(x, TimeSeries(y.t0 + y.dt, y.dt, y.samples))


def test_supplied_stiffness_skips_the_fit(short_record, clean_k):
    res = identify(*short_record, k=clean_k)
    assert res.fit is None and res.k == clean_k
    assert res.trajectory.valid.sum() <= res.untrimmed.valid.sum()


def test_hvd_and_direct_routes_agree_on_clean_data(short_record, clean_k):
    a = identify(*short_record, k=clean_k)
    b = identify(*short_record, config=PipelineConfig(use_hvd=False), k=clean_k)
    v = a.trajectory.valid & b.trajectory.valid
    assert np.median(np.abs(a.trajectory.omega_n[v] / b.trajectory.omega_n[v] - 1)) < 0.005


def test_bins_and_medians():
    edges = amplitude_bins(np.array([1.0, 10.0, np.nan, -1.0]), bins=2)
    assert edges[0] == 1.0 and edges[-1] == 10.0 and edges[1] == pytest.approx(np.sqrt(10))


def test_binned_median_puts_the_top_sample_in_the_last_bin(short_record, clean_k):
    traj = identify(*short_record, k=clean_k).trajectory
    edges = amplitude_bins(traj.selected()[0], bins=5)
    med = binned_median(traj, edges)
    assert med.shape == (5,) and np.all(np.isfinite(med))


def test_seeds_depend_on_position_only():
    assert trial_seed(0, 1, 2) == trial_seed(0, 1, 2)
    assert len({trial_seed(0, j, i) for j in range(3) for i in range(3)}) == 9


class TestNoiseStudy:
    def test_needs_two_trials(self, short_record):
        with pytest.raises(ParameterError):
            noise_study(*short_record, [20], trials=1)

    def test_infinite_snr_has_zero_width(self, short_record, clean_k):
        (env,) = noise_study(*short_record, [math.inf], trials=2, k=clean_k, bins=10, workers=1)
        ok = env.count > 0
        assert np.array_equal(env.omega_min[ok], env.omega_max[ok])
        assert env.max_deviation() == pytest.approx(0.0, abs=1e-12)
        assert env.contains_clean()

    def test_result_does_not_depend_on_workers(self, short_record, clean_k):
        serial = noise_study(*short_record, [30], trials=2, seed=5, k=clean_k, bins=10, workers=1)
        parallel = noise_study(*short_record, [30], trials=2, seed=5, k=clean_k, bins=10, workers=2)
        for a, b in zip(serial, parallel):
            assert np.array_equal(a.omega_min, b.omega_min, equal_nan=True)
            assert np.array_equal(a.omega_max, b.omega_max, equal_nan=True)

    def test_noisier_records_spread_wider(self, short_record, clean_k):
        envs = noise_study(*short_record, [40, 15], trials=3, seed=1, k=clean_k, bins=10, workers=1)
        assert [e.snr_db for e in envs] == [40.0, 15.0]
        assert envs[0].max_deviation() < envs[1].max_deviation()
        assert all(e.trials == 3 for e in envs)


def test_decomposition_settling_widens_the_edge_zones(short_record, clean_k):
    x, y = short_record
    _, _, cutoff = hvd_largest_component(y, return_cutoff=True)
    res = identify(x, y, k=clean_k)
    settle = HVD_SETTLE_CYCLES / cutoff
    reliable_t = res.response.t[res.response.reliable]
    assert reliable_t[0] >= settle - y.dt
    assert reliable_t[-1] <= y.t[-1] - settle + y.dt


def test_record_too_short_for_the_decomposition(short_record):
    # a 1 Hz low-pass needs 3 s at each end of a 4 s record
    cfg = PipelineConfig(hvd=HvdConfig(lowpass_cutoff_hz=1.0))
    with pytest.raises(TooShortError, match="settle"):
        identify(*short_record, config=cfg)
