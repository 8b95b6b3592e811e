"""Analytic-signal machinery and Hilbert Vibration Decomposition.

All routines are pure functions over immutable :class:`TimeSeries`
objects.  The Hilbert transform is computed offline in the frequency
domain, so every derived quantity is subject to edge effects; the
:attr:`AnalyticRecord.reliable` mask flags the affected samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps
from scipy.integrate import cumulative_trapezoid

from .errors import (
    AlignmentError,
    DecompositionError,
    InvalidInputError,
    ParameterError,
    TooShortError,
)

MIN_LENGTH = 16
DEFAULT_EDGE_TRIM = 0.05


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled real-valued signal.

    Parameters
    ----------
    t0 : float
        Time of the first sample [s].
    dt : float
        Sample step [s].
    samples : array_like
        Real sample values.  A private read-only copy is stored.
    """

    t0: float
    dt: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1:
            raise InvalidInputError(f"samples must be one-dimensional, got shape {samples.shape}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InvalidInputError(f"dt must be positive and finite, got {self.dt}")
        if samples.size < MIN_LENGTH:
            raise TooShortError(f"need at least {MIN_LENGTH} samples, got {samples.size}")
        if not np.all(np.isfinite(samples)):
            bad = int(np.flatnonzero(~np.isfinite(samples))[0])
            raise InvalidInputError(f"non-finite sample at index {bad}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self):
        return self.samples.size

    @property
    def fs(self) -> float:
        return 1.0 / self.dt

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def duration(self) -> float:
        return self.dt * self.samples.size

    def with_samples(self, samples) -> "TimeSeries":
        """Return a series on the same time grid with new samples."""
        return TimeSeries(self.t0, self.dt, samples)

    def is_aligned(self, other: "TimeSeries") -> bool:
        return (
            len(self) == len(other)
            and np.isclose(self.dt, other.dt, rtol=1e-9, atol=0.0)
            and abs(self.t0 - other.t0) <= 1e-6 * self.dt
        )


def check_aligned(a: TimeSeries, b: TimeSeries) -> None:
    if not a.is_aligned(b):
        raise AlignmentError(
            f"series are not aligned: (t0={a.t0}, dt={a.dt}, n={len(a)}) vs "
            f"(t0={b.t0}, dt={b.dt}, n={len(b)})"
        )


@dataclass(frozen=True)
class AnalyticRecord:
    """Analytic representation of one signal and its first two derivatives.

    ``signal`` is the mean-removed input; ``mean`` holds what was removed.
    All arrays share the length of ``base``.  ``reliable`` is False inside
    the trimmed edge zones.
    """

    base: TimeSeries
    mean: float
    signal: np.ndarray = field(repr=False)
    hilbert: np.ndarray = field(repr=False)
    d1: np.ndarray = field(repr=False)
    d1_h: np.ndarray = field(repr=False)
    d2: np.ndarray = field(repr=False)
    d2_h: np.ndarray = field(repr=False)
    envelope: np.ndarray = field(repr=False)
    phase: np.ndarray = field(repr=False)
    inst_freq: np.ndarray = field(repr=False)
    reliable: np.ndarray = field(repr=False)

    @property
    def t(self) -> np.ndarray:
        return self.base.t

    @property
    def dt(self) -> float:
        return self.base.dt

    def derivative_envelope(self, order: int = 1) -> np.ndarray:
        """Envelope of the analytic derivative of the given order (1 or 2)."""
        if order == 1:
            return np.hypot(self.d1, self.d1_h)
        if order == 2:
            return np.hypot(self.d2, self.d2_h)
        raise ParameterError(f"order must be 1 or 2, got {order}")


@dataclass(frozen=True)
class HvdConfig:
    """Settings for :func:`hvd_largest_component`.

    Parameters
    ----------
    lowpass_cutoff_hz : float or None
        Cutoff of the zero-phase low-pass used to average the instantaneous
        frequency and to demodulate.  ``None`` picks one tenth of the median
        carrier frequency.  Must stay below the lowest carrier frequency.
    demod_iterations : int
        Number of synchronous-demodulation passes; each pass refines the
        reference phase with the residual phase offset of the previous one.
    edge_trim_fraction : float
        Fraction of samples at each end flagged unreliable, in [0, 0.5).
    band_limit : bool
        Estimate the initial instantaneous frequency from a band-passed copy
        of the signal restricted to its dominant spectral band.  The
        demodulation itself always acts on the unfiltered input.
    """

    lowpass_cutoff_hz: float | None = None
    demod_iterations: int = 3
    edge_trim_fraction: float = DEFAULT_EDGE_TRIM
    band_limit: bool = True

    def __post_init__(self):
        if self.lowpass_cutoff_hz is not None and not self.lowpass_cutoff_hz > 0:
            raise ParameterError("lowpass_cutoff_hz must be positive")
        if int(self.demod_iterations) < 1:
            raise ParameterError("demod_iterations must be a positive integer")
        if not 0.0 <= self.edge_trim_fraction < 0.5:
            raise ParameterError("edge_trim_fraction must lie in [0, 0.5)")


def _as_samples(x) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return x.samples
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError("expected a one-dimensional signal")
    if arr.size < MIN_LENGTH:
        raise TooShortError(f"need at least {MIN_LENGTH} samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("signal contains non-finite samples")
    return arr


def edge_mask(n: int, fraction: float) -> np.ndarray:
    """Boolean mask that is False on the first and last ``fraction`` of n samples."""
    mask = np.ones(n, dtype=bool)
    trim = int(np.ceil(fraction * n)) if fraction > 0 else 0
    if trim:
        mask[:trim] = False
        mask[n - trim:] = False
    return mask


def _edge_taper(n: int, fraction: float) -> np.ndarray:
    # raised-cosine ramps over the unreliable edge zones, unity elsewhere
    w = np.ones(n)
    m = int(np.floor(fraction * n))
    if m > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * (np.arange(m) + 0.5) / m)
        w[:m] = ramp
        w[n - m:] = ramp[::-1]
    return w


def hilbert_transform(x) -> np.ndarray:
    """Hilbert transform of a real signal.

    The mean is removed first, then negative frequencies are zeroed and
    positive ones doubled (FFT method).  Positive-frequency content is
    shifted by -pi/2 with unit gain; DC maps to zero.

    Parameters
    ----------
    x : TimeSeries or array_like
        At least 16 finite samples.

    Returns
    -------
    numpy.ndarray
        The transformed samples, same length as ``x``.
    """
    samples = _as_samples(x)
    return np.imag(sps.hilbert(samples - samples.mean()))


def differentiate(x, dt: float, accuracy: int = 2) -> np.ndarray:
    """Finite-difference derivative on a uniform grid.

    ``accuracy=2`` uses second-order central differences in the interior;
    ``accuracy=4`` uses the five-point central stencil wherever it fits and
    falls back to the second-order scheme next to the ends.  The end
    samples always use one-sided second-order stencils.  Both central
    stencils have zero gain at the Nyquist frequency.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 3:
        raise TooShortError("differentiate needs a 1-D array of at least 3 samples")
    if not dt > 0:
        raise ParameterError("dt must be positive")
    out = np.gradient(arr, dt, edge_order=2)
    if accuracy == 4:
        if arr.size >= 5:
            out[2:-2] = (arr[:-4] - 8.0 * arr[1:-3] + 8.0 * arr[3:-1] - arr[4:]) / (12.0 * dt)
    elif accuracy != 2:
        raise ParameterError("accuracy must be 2 or 4")
    return out


def make_analytic(x: TimeSeries, edge_trim_fraction: float = DEFAULT_EDGE_TRIM,
                  taper: bool = True) -> AnalyticRecord:
    """Build the :class:`AnalyticRecord` of ``x``.

    Envelope and unwrapped phase come from ``y + j*H[y]``; the instantaneous
    frequency [rad/s] is the finite-difference derivative of the phase.
    Signal and transform are differentiated with fourth-order central
    differences, twice for the second derivatives.

    With ``taper`` the transform is taken of the signal multiplied by
    raised-cosine ramps spanning the edge zones.  A record that ends
    abruptly at large amplitude otherwise leaks a slowly varying offset
    of order ``A / (pi * omega * distance)`` into the transform far into
    the interior.  Only the transform sees the taper; ``signal`` and its
    derivatives are untouched.
    """
    if not isinstance(x, TimeSeries):
        raise InvalidInputError("make_analytic expects a TimeSeries")
    mean = float(x.samples.mean())
    y = x.samples - mean
    window = _edge_taper(y.size, edge_trim_fraction) if taper else 1.0
    yh = np.imag(sps.hilbert(y * window))
    dt = x.dt
    d1 = differentiate(y, dt, accuracy=4)
    d1_h = differentiate(yh, dt, accuracy=4)
    d2 = differentiate(d1, dt, accuracy=4)
    d2_h = differentiate(d1_h, dt, accuracy=4)
    phase = np.unwrap(np.arctan2(yh, y))
    return AnalyticRecord(
        base=x,
        mean=mean,
        signal=y,
        hilbert=yh,
        d1=d1,
        d1_h=d1_h,
        d2=d2,
        d2_h=d2_h,
        envelope=np.hypot(y, yh),
        phase=phase,
        inst_freq=differentiate(phase, dt),
        reliable=edge_mask(len(x), edge_trim_fraction),
    )


# cutoff periods after which the zero-phase low-pass has settled at either
# end; the decomposed component is then within 1e-4 of its envelope
HVD_SETTLE_CYCLES = 3.0


def _lowpass(values: np.ndarray, cutoff_hz: float, fs: float) -> np.ndarray:
    # zero-phase 2nd-order Butterworth applied forward and backward
    sos = sps.butter(2, cutoff_hz, btype="low", fs=fs, output="sos")
    padlen = min(values.size - 1, int(3 * fs / cutoff_hz))
    return sps.sosfiltfilt(sos, values, padtype="odd", padlen=padlen)


def dominant_band(samples: np.ndarray, fs: float, floor_db: float = -20.0) -> tuple[float, float]:
    """Contiguous frequency band around the spectral peak above ``floor_db``.

    Returns the band edges in Hz, from a Welch estimate of the power
    spectral density of the mean-removed samples.
    """
    nperseg = min(samples.size, max(256, 2 ** int(np.log2(samples.size / 8))))
    f, pxx = sps.welch(samples - samples.mean(), fs=fs, nperseg=nperseg)
    pxx[0] = 0.0
    peak = int(np.argmax(pxx))
    above = pxx >= pxx[peak] * 10.0 ** (floor_db / 10.0)
    lo = peak
    while lo > 1 and above[lo - 1]:
        lo -= 1
    hi = peak
    while hi < f.size - 1 and above[hi + 1]:
        hi += 1
    df = f[1] - f[0]
    return max(f[lo] - df, df), f[hi] + df


def _initial_frequency(samples: np.ndarray, fs: float, band_limit: bool) -> np.ndarray:
    work = samples - samples.mean()
    if band_limit:
        lo, hi = dominant_band(work, fs)
        lo, hi = 0.5 * lo, min(1.5 * hi, 0.45 * fs)
        sos = sps.butter(4, [lo, hi], btype="band", fs=fs, output="sos")
        work = sps.sosfiltfilt(sos, work)
    analytic = sps.hilbert(work)
    return differentiate(np.unwrap(np.angle(analytic)), 1.0 / fs)


def _spans(mask: np.ndarray, t: np.ndarray) -> list[tuple[float, float]]:
    idx = np.flatnonzero(np.diff(np.concatenate(([0], mask.view(np.int8), [0]))))
    return [(float(t[a]), float(t[b - 1])) for a, b in zip(idx[::2], idx[1::2])]


def hvd_largest_component(x: TimeSeries, cfg: HvdConfig | None = None, return_cutoff: bool = False):
    """Extract the largest non-stationary component of ``x``.

    The instantaneous frequency is averaged with a zero-phase low-pass and
    integrated into a reference phase; synchronous demodulation against the
    reference then yields the slowly varying envelope and phase offset of
    the dominant component.  Each extra iteration folds the phase offset
    back into the reference.

    Returns
    -------
    component, residual : TimeSeries
        ``component + residual`` reproduces ``x``; the input mean stays in
        the residual.
    cutoff : float
        Low-pass cutoff actually used [Hz], only with ``return_cutoff=True``.
        The component settles within about :data:`HVD_SETTLE_CYCLES` / cutoff
        seconds of either end.

    Raises
    ------
    DecompositionError
        If the averaged frequency drops below the low-pass cutoff outside
        the trimmed edges, so that the carrier cannot be separated.
    """
    cfg = cfg or HvdConfig()
    fs = x.fs
    xc = x.samples - x.samples.mean()
    inner = edge_mask(len(x), cfg.edge_trim_fraction)

    omega = _initial_frequency(x.samples, fs, cfg.band_limit)
    cutoff = cfg.lowpass_cutoff_hz
    if cutoff is None:
        cutoff = 0.1 * abs(float(np.median(omega[inner]))) / (2 * np.pi)
        if not cutoff > 0:
            raise DecompositionError("could not estimate a carrier frequency")
    if cutoff >= 0.5 * fs:
        raise ParameterError("lowpass cutoff must be below the Nyquist frequency")

    omega_ref = _lowpass(omega, cutoff, fs)
    low = inner & (omega_ref / (2 * np.pi) <= cutoff)
    if np.any(low):
        spans = ", ".join(f"[{a:.6g}, {b:.6g}] s" for a, b in _spans(low, x.t))
        raise DecompositionError(
            f"instantaneous frequency falls below the {cutoff:.6g} Hz cutoff over {spans}"
        )

    ref_phase = cumulative_trapezoid(omega_ref, dx=x.dt, initial=0.0)
    for it in range(int(cfg.demod_iterations)):
        cos_ref, sin_ref = np.cos(ref_phase), np.sin(ref_phase)
        in_phase = _lowpass(xc * cos_ref, cutoff, fs)
        quadrature = _lowpass(xc * sin_ref, cutoff, fs)
        if it < cfg.demod_iterations - 1:
            ref_phase = ref_phase + np.unwrap(np.arctan2(-quadrature, in_phase))
    component = 2.0 * (in_phase * cos_ref + quadrature * sin_ref)
    residual = x.samples - component
    if return_cutoff:
        return x.with_samples(component), x.with_samples(residual), float(cutoff)
    return x.with_samples(component), x.with_samples(residual)


def snr_estimate(x: TimeSeries, component: TimeSeries) -> float:
    """Signal-to-noise ratio [dB] of ``component`` against ``x - component``.

    Returns ``inf`` when the residual has zero power.
    """
    a = _as_samples(x)
    c = _as_samples(component)
    if a.size != c.size:
        raise AlignmentError("x and component must have equal lengths")
    p_noise = float(np.mean((a - c) ** 2))
    p_signal = float(np.mean(c ** 2))
    if p_noise == 0.0:
        return float("inf")
    if p_signal == 0.0:
        return float("-inf")
    return 10.0 * np.log10(p_signal / p_noise)
