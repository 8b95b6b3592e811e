import numpy as np
import pytest

from varinertia.errors import (
    AlignmentError,
    DecompositionError,
    InvalidInputError,
    ParameterError,
    TooShortError,
)
from varinertia.signal_core import (
    HvdConfig,
    TimeSeries,
    check_aligned,
    differentiate,
    edge_mask,
    hilbert_transform,
    hvd_largest_component,
    make_analytic,
    snr_estimate,
)


def tone(f=10.0, fs=1000.0, duration=4.0, amp=1.0, kind=np.cos):
    t = np.arange(int(duration * fs)) / fs
    return TimeSeries(0.0, 1.0 / fs, amp * kind(2 * np.pi * f * t))


def middle(a, frac=0.1):
    n = len(a)
    return a[int(frac * n): n - int(frac * n)]


def rms(a):
    return float(np.sqrt(np.mean(np.square(a))))


class TestTimeSeries:
    def test_invariants(self):
        with pytest.raises(InvalidInputError):
            TimeSeries(0.0, 0.0, np.zeros(20))
        with pytest.raises(TooShortError):
            TimeSeries(0.0, 0.1, np.zeros(15))
        samples = np.zeros(20)
        samples[3] = np.nan
        with pytest.raises(InvalidInputError, match="index 3"):
            TimeSeries(0.0, 0.1, samples)

    def test_samples_are_private_and_read_only(self):
        raw = np.arange(20.0)
        x = TimeSeries(1.0, 0.5, raw)
        raw[0] = 99.0
        assert x.samples[0] == 0.0
        with pytest.raises(ValueError):
            x.samples[0] = 1.0
        assert x.t[1] == 1.5 and x.fs == 2.0 and len(x) == 20

    def test_alignment(self):
        a = TimeSeries(0.0, 0.1, np.zeros(20))
        check_aligned(a, a.with_samples(np.ones(20)))
        with pytest.raises(AlignmentError):
            check_aligned(a, TimeSeries(0.0, 0.1, np.zeros(21)))
        with pytest.raises(AlignmentError):
            check_aligned(a, TimeSeries(0.05, 0.1, np.zeros(20)))


class TestHilbert:
    def test_cosine_maps_to_sine(self):
        x = tone()
        expected = np.sin(2 * np.pi * 10 * x.t)
        assert rms(middle(hilbert_transform(x) - expected)) < 1e-3

    def test_sine_maps_to_minus_cosine(self):
        x = tone(kind=np.sin)
        expected = -np.cos(2 * np.pi * 10 * x.t)
        assert rms(middle(hilbert_transform(x) - expected)) < 1e-3

    def test_constant_maps_to_zero(self):
        assert np.max(np.abs(hilbert_transform(np.full(64, 5.0)))) < 1e-9

    def test_accepts_arrays_and_validates(self):
        with pytest.raises(TooShortError):
            hilbert_transform(np.ones(10))
        with pytest.raises(InvalidInputError):
            hilbert_transform(np.r_[np.ones(20), np.inf])

    def test_unit_gain_and_involution_on_periodic_band_limited_signal(self):
        n = 1024
        t = np.arange(n) / n
        y = np.cos(2 * np.pi * 5 * t) + 0.3 * np.sin(2 * np.pi * 17 * t + 0.4)
        h = hilbert_transform(y)
        assert abs(np.mean(h ** 2) / np.mean(y ** 2) - 1) < 1e-6
        assert rms(hilbert_transform(h) + y) < 1e-6


class TestDifferentiate:
    def test_exact_for_quadratics(self):
        dt = 0.01
        t = np.arange(200) * dt
        assert np.max(np.abs(differentiate(t ** 2, dt)[1:-1] - 2 * t[1:-1])) < 1e-6
        # one-sided second-order ends are exact too
        assert np.max(np.abs(differentiate(t ** 2, dt) - 2 * t)) < 1e-6

    def test_sine_error_scales_with_order(self):
        for dt in (0.01, 0.005):
            t = np.arange(0, 10, dt)
            err2 = np.max(np.abs(differentiate(np.sin(t), dt)[1:-1] - np.cos(t[1:-1])))
            err4 = np.max(np.abs(differentiate(np.sin(t), dt, 4)[2:-2] - np.cos(t[2:-2])))
            assert err2 < dt ** 2
            assert err4 < dt ** 4

    def test_constant_and_errors(self):
        assert np.all(differentiate(np.full(10, 3.0), 0.1) == 0.0)
        with pytest.raises(TooShortError):
            differentiate([1.0, 2.0], 0.1)
        with pytest.raises(ParameterError):
            differentiate([1.0, 2.0, 3.0], 0.0)
        with pytest.raises(ParameterError):
            differentiate(np.arange(10.0), 0.1, accuracy=3)

    def test_four_point_stencil_rejects_nyquist(self):
        alternating = (-1.0) ** np.arange(40)
        assert np.max(np.abs(differentiate(alternating, 1.0, 4)[2:-2])) < 1e-12


class TestMakeAnalytic:
    def test_constant_tone(self):
        rec = make_analytic(tone(amp=3.0))
        ok = rec.reliable
        assert np.max(np.abs(rec.envelope[ok] / 3.0 - 1)) < 0.01
        assert np.max(np.abs(rec.inst_freq[ok] / (2 * np.pi * 10) - 1)) < 0.01
        assert rec.mean == pytest.approx(0.0, abs=1e-12)
        for name in ("signal", "hilbert", "d1", "d1_h", "d2", "d2_h", "envelope", "phase", "inst_freq"):
            assert getattr(rec, name).shape == (len(rec.base),)

    def test_chirp_frequency_is_linear(self):
        fs, T = 2000.0, 10.0
        t = np.arange(int(T * fs)) / fs
        x = TimeSeries(0.0, 1 / fs, np.sin(2 * np.pi * (20 * t + 0.5 * 20 * t ** 2 / T)))
        rec = make_analytic(x)
        mid = (t > 2) & (t < 8)
        slope = np.polyfit(t[mid], rec.inst_freq[mid], 1)[0]
        assert slope == pytest.approx(2 * np.pi * 2, rel=0.02)

    def test_growing_envelope(self):
        fs = 2000.0
        t = np.arange(int(10 * fs)) / fs
        a = 1 + 0.1 * t
        rec = make_analytic(TimeSeries(0.0, 1 / fs, a * np.cos(2 * np.pi * 30 * t)))
        mid = (t > 2) & (t < 8)
        assert np.max(np.abs(rec.envelope[mid] / a[mid] - 1)) < 0.01

    def test_mean_is_removed_and_reported(self):
        x = tone()
        rec = make_analytic(x.with_samples(x.samples + 2.5))
        assert rec.mean == pytest.approx(2.5, abs=1e-9)
        assert np.allclose(rec.signal, x.samples - x.samples.mean())

    def test_derivative_envelopes(self):
        w = 2 * np.pi * 10
        rec = make_analytic(tone(amp=2.0))
        ok = rec.reliable
        # the edge taper leaves a ripple of a few tenths of a percent
        assert np.allclose(rec.derivative_envelope(1)[ok], 2 * w, rtol=0.01)
        assert np.allclose(rec.derivative_envelope(2)[ok], 2 * w * w, rtol=0.01)
        plain = make_analytic(tone(amp=2.0), taper=False)
        assert np.allclose(plain.derivative_envelope(1)[ok], 2 * w, rtol=1e-5)
        with pytest.raises(ParameterError):
            rec.derivative_envelope(3)

    def test_reliable_mask(self):
        mask = edge_mask(100, 0.05)
        assert mask.sum() == 90 and not mask[4] and mask[5] and not mask[95]
        assert edge_mask(10, 0.0).all()

    def test_rejects_plain_arrays(self):
        with pytest.raises(InvalidInputError):
            make_analytic(np.zeros(32))


class TestHvd:
    @staticmethod
    def chirp_series(fs=2000.0, T=10.0):
        t = np.arange(int(T * fs)) / fs
        return TimeSeries(0.0, 1 / fs, np.sin(2 * np.pi * (20 * t + 0.5 * 20 * t ** 2 / T)))

    def test_clean_chirp_is_a_fixed_point(self):
        x = self.chirp_series()
        comp, res = hvd_largest_component(x)
        assert rms(middle(comp.samples - x.samples)) < 0.01 * rms(middle(x.samples))
        assert np.max(np.abs(comp.samples + res.samples - x.samples)) <= 1e-12

    def test_picks_the_larger_tone(self):
        fs = 2000.0
        t = np.arange(int(4 * fs)) / fs
        big = np.cos(2 * np.pi * 30 * t)
        x = TimeSeries(0.0, 1 / fs, big + 0.2 * np.cos(2 * np.pi * 90 * t))
        comp, _ = hvd_largest_component(x)
        assert rms(middle(comp.samples - big)) < 0.03 * rms(big)

    def test_noisy_chirp(self):
        x = self.chirp_series()
        rng = np.random.default_rng(1)
        noise = rng.standard_normal(len(x))
        noise *= np.sqrt(np.mean(x.samples ** 2) / 100 / np.mean(noise ** 2))
        comp, _ = hvd_largest_component(x.with_samples(x.samples + noise))
        assert rms(middle(comp.samples - x.samples)) < 0.05 * rms(middle(x.samples))

    def test_cutoff_above_carrier_fails_with_span(self):
        with pytest.raises(DecompositionError, match=r"\[[\d.]+, [\d.]+\] s"):
            hvd_largest_component(self.chirp_series(), HvdConfig(lowpass_cutoff_hz=25.0))

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            HvdConfig(lowpass_cutoff_hz=0.0)
        with pytest.raises(ParameterError):
            HvdConfig(demod_iterations=0)
        with pytest.raises(ParameterError):
            HvdConfig(edge_trim_fraction=0.5)


class TestSnrEstimate:
    def test_twenty_db(self):
        fs = 1000.0
        t = np.arange(4000) / fs
        comp = TimeSeries(0.0, 1 / fs, np.sqrt(2) * np.cos(2 * np.pi * 10 * t))
        noise = np.random.default_rng(0).standard_normal(t.size) * 0.1
        assert snr_estimate(comp.with_samples(comp.samples + noise), comp) == pytest.approx(20.0, abs=1.0)

    def test_sentinels(self):
        x = tone()
        assert snr_estimate(x, x) == np.inf
        assert snr_estimate(x.with_samples(2 * x.samples), x) == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(AlignmentError):
            snr_estimate(np.ones(20), np.ones(21))
