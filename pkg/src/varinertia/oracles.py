"""Independent reference backbones.

Two routes to the amplitude-dependent natural frequency, neither of
which shares code with the identification path:

* the Lindstedt-Poincare series for the simple variable-inertia
  oscillator, truncated at order 0, 1 or 2;
* free undamped simulations started at a chosen amplitude, whose period
  is measured from zero crossings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfValidityError, ParameterError, TooShortError
from .signal_core import TimeSeries
from .simulators import (
    RlcParams,
    SimpleOscillatorParams,
    StickSlipParams,
    simulate_rlc,
    simulate_simple,
)

LP_COEFFICIENTS = (3.0 / 8.0, 65.0 / 256.0)
DEFAULT_CYCLES = 20
DEFAULT_SAMPLES_PER_PERIOD = 200


@dataclass(frozen=True)
class LpBackbone:
    """Truncated perturbation backbone ``w0 (1 - c1 eps A^2 + c2 eps^2 A^4)``.

    Parameters
    ----------
    omega0 : float
        Linear natural frequency [rad/s].
    epsilon : float
        Inertia nonlinearity ``beta / m`` [1/m^2].
    order : int
        Number of correction terms kept, 0, 1 or 2.
    coefficients : tuple of float
        ``(c1, c2)``; ``c1 = 3/8`` and ``c2 = 65/256`` by default.
    """

    omega0: float
    epsilon: float
    order: int = 2
    coefficients: tuple = LP_COEFFICIENTS

    def __post_init__(self):
        if self.order not in (0, 1, 2):
            raise ParameterError(f"order must be 0, 1 or 2, got {self.order}")
        if not self.omega0 > 0:
            raise ParameterError("omega0 must be positive")
        if len(self.coefficients) != 2:
            raise ParameterError("coefficients must hold (c1, c2)")

    @classmethod
    def for_params(cls, p: SimpleOscillatorParams, order: int = 2) -> "LpBackbone":
        return cls(omega0=p.omega0, epsilon=p.epsilon, order=order)


@dataclass(frozen=True)
class BackboneSample:
    amplitude: float
    omega_n: float


def lp_backbone_eval(b: LpBackbone, A):
    """Evaluate the truncated series at amplitude(s) ``A``.

    Raises
    ------
    OutOfValidityError
        If ``epsilon * A**2 >= 1`` anywhere; the series is meaningless there.
    """
    amp = np.asarray(A, dtype=float)
    u = b.epsilon * amp * amp
    if np.any(np.abs(u) >= 1.0):
        raise OutOfValidityError(
            f"epsilon*A^2 reaches {float(np.max(np.abs(u))):.3g}; the series needs epsilon*A^2 < 1"
        )
    c1, c2 = b.coefficients
    factor = np.ones_like(u)
    if b.order >= 1:
        factor = factor - c1 * u
    if b.order >= 2:
        factor = factor + c2 * u * u
    out = b.omega0 * factor
    return out if out.ndim else float(out)


def _crossing_times(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    # linear interpolation between samples of opposite sign
    sgn = np.signbit(v)
    idx = np.flatnonzero(sgn[1:] != sgn[:-1])
    v0, v1 = v[idx], v[idx + 1]
    return t[idx] + (t[idx + 1] - t[idx]) * v0 / (v0 - v1)


def _period_from_signal(t: np.ndarray, v: np.ndarray, cycles: int,
                        amplitude: str) -> tuple[float, float]:
    tc = _crossing_times(t, v)
    if tc.size < 3:
        raise TooShortError(f"only {tc.size} zero crossing(s) in the free response")
    tc = tc[: 2 * cycles + 1]
    period = 2.0 * (tc[-1] - tc[0]) / (tc.size - 1)
    if amplitude == "peak":
        edges = np.searchsorted(t, tc)
        peaks = [np.max(np.abs(v[a:b])) for a, b in zip(edges[:-1], edges[1:]) if b > a]
        return period, float(np.mean(peaks))
    # first-harmonic magnitude over the whole cycles between the crossings
    omega = 2 * np.pi / period
    # the interpolated crossings close the window with exact zeros
    span = (t > tc[0]) & (t < tc[-1])
    ts = np.concatenate(([tc[0]], t[span], [tc[-1]]))
    vs = np.concatenate(([0.0], v[span], [0.0]))
    coef = np.trapezoid(vs * np.exp(-1j * omega * ts), ts)
    return period, float(2.0 * abs(coef) / (ts[-1] - ts[0]))


def free_oscillation_period(system, A0: float, cycles: int = DEFAULT_CYCLES,
                            samples_per_period: int = DEFAULT_SAMPLES_PER_PERIOD,
                            amplitude: str = "fundamental") -> BackboneSample:
    """Natural frequency of the undamped free response started at amplitude ``A0``.

    The simple oscillator starts at displacement ``A0`` at rest; the RLC
    circuit starts with current ``A0`` and no charge, and its amplitude is
    measured on the current.  The period is the mean over the first
    ``cycles`` cycles, taken between linearly interpolated zero crossings.

    ``amplitude="fundamental"`` reports the magnitude of the first
    harmonic over those cycles, which is what an analytic-signal envelope
    averages to and what the perturbation series calls ``A``.
    ``amplitude="peak"`` reports the mean half-cycle peak instead; for the
    simple oscillator the two differ at second order (the third harmonic
    is ``-eps A^3 / 32``).

    Raises
    ------
    ParameterError
        For a dissipative configuration, a non-positive ``A0`` or an
        unsupported system type.
    TooShortError
        If the response shows fewer than three zero crossings.
    """
    if not A0 > 0:
        raise ParameterError("A0 must be positive")
    if amplitude not in ("fundamental", "peak"):
        raise ParameterError("amplitude must be 'fundamental' or 'peak'")
    if isinstance(system, SimpleOscillatorParams):
        if system.c != 0:
            raise ParameterError("free-oscillation backbone needs c = 0")
        # the period never exceeds the one at maximal inertia
        w_low = system.omega0 / np.sqrt(1.0 + abs(system.epsilon) * A0 * A0)
        dt = 2 * np.pi / system.omega0 / samples_per_period
        n = int(np.ceil((cycles + 2) * 2 * np.pi / w_low / dt)) + 1
        y = simulate_simple(system, TimeSeries(0.0, dt, np.zeros(n)), A0, 0.0)
        period, amp = _period_from_signal(y.t, y.samples, cycles, amplitude)
    elif isinstance(system, RlcParams):
        if system.R != 0:
            raise ParameterError("free-oscillation backbone needs R = 0")
        f_high = system.f_ds
        dt = 1.0 / f_high / samples_per_period
        n = int(np.ceil((cycles + 2) / system.f_nom / dt)) + 1
        _, current = simulate_rlc(system, TimeSeries(0.0, dt, np.zeros(n)), 0.0, A0)
        period, amp = _period_from_signal(current.t, current.samples, cycles, amplitude)
    elif isinstance(system, StickSlipParams):
        raise ParameterError("free-oscillation backbone is not defined for the stick-slip system")
    else:
        raise ParameterError(f"unsupported system type {type(system).__name__}")
    return BackboneSample(amplitude=amp, omega_n=2 * np.pi / period)


def sweep_free_backbone(system, amplitudes, **kwargs) -> list[BackboneSample]:
    """:func:`free_oscillation_period` over several initial amplitudes, sorted by measured amplitude."""
    amps = np.atleast_1d(np.asarray(amplitudes, dtype=float))
    if amps.size == 0:
        raise ParameterError("need at least one amplitude")
    samples = [free_oscillation_period(system, float(a), **kwargs) for a in amps]
    return sorted(samples, key=lambda s: s.amplitude)
