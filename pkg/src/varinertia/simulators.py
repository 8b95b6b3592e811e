"""Ground-truth simulators for the three case-study systems.

Every simulator integrates with fixed-step explicit RK4 using
``substeps`` steps per excitation sample.  The sampled excitation is
evaluated between samples by four-point cubic Lagrange interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np

from .errors import AliasingError, DivergenceError, ParameterError
from .signal_core import TimeSeries

OVERFLOW_GUARD = 1e12


@dataclass(frozen=True)
class SimpleOscillatorParams:
    """``(m + beta*y**2) y'' + c y' + k y = x``.

    The undamped form (``c = 0``) is the variable-inertia test system; a
    nonzero ``c`` with ``beta = 0`` gives the linear benchmark oscillator.
    """

    m: float
    beta: float
    k: float
    c: float = 0.0

    def __post_init__(self):
        if not (self.m > 0 and self.k > 0):
            raise ParameterError("m and k must be positive")
        if self.beta < 0 or self.c < 0:
            raise ParameterError("beta and c must be non-negative")

    @property
    def epsilon(self) -> float:
        return self.beta / self.m

    @property
    def omega0(self) -> float:
        return float(np.sqrt(self.k / self.m))


@dataclass(frozen=True)
class RlcParams:
    """Series RLC circuit with a saturating inductor (SI units)."""

    L_nom: float
    L_ds: float
    i_star: float
    sigma: float
    C: float
    R: float

    def __post_init__(self):
        if not self.L_nom > self.L_ds > 0:
            raise ParameterError("need L_nom > L_ds > 0")
        if not (self.C > 0 and self.sigma > 0):
            raise ParameterError("C and sigma must be positive")
        if self.R < 0:
            raise ParameterError("R must be non-negative")

    @property
    def f_nom(self) -> float:
        return 1.0 / (2 * np.pi * np.sqrt(self.L_nom * self.C))

    @property
    def f_ds(self) -> float:
        return 1.0 / (2 * np.pi * np.sqrt(self.L_ds * self.C))


@dataclass(frozen=True)
class StickSlipParams:
    """Two masses coupled by Coulomb friction; ``m1`` carries spring and dashpot."""

    m1: float
    m2: float
    k: float
    c: float
    mu: float
    g: float = 9.81
    vel_tol: float = 1e-6

    def __post_init__(self):
        if not (self.m1 > 0 and self.m2 > 0 and self.k > 0):
            raise ParameterError("masses and k must be positive")
        if self.mu < 0 or self.c < 0 or self.g < 0:
            raise ParameterError("mu, c and g must be non-negative")
        if not self.vel_tol > 0:
            raise ParameterError("vel_tol must be positive")

    @property
    def f_stick(self) -> float:
        return float(np.sqrt(self.k / (self.m1 + self.m2)) / (2 * np.pi))

    @property
    def f_slip(self) -> float:
        return float(np.sqrt(self.k / self.m1) / (2 * np.pi))

    @property
    def h_stick(self) -> float:
        return self.c / (2 * (self.m1 + self.m2))

    @property
    def friction_limit(self) -> float:
        return self.mu * self.m2 * self.g

    @classmethod
    def default(cls) -> "StickSlipParams":
        m1, m2 = 1.0, 0.5
        k = (2 * np.pi * 10.0) ** 2 * (m1 + m2)
        c = 2 * 0.01 * np.sqrt(k * (m1 + m2))
        return cls(m1=m1, m2=m2, k=k, c=c, mu=0.2, g=9.81, vel_tol=1e-6)


@dataclass(frozen=True)
class ChirpParams:
    """Constant-amplitude linear sweep from ``f1`` to ``f2`` Hz."""

    amplitude: float
    f1: float
    f2: float
    duration: float
    fs: float

    def __post_init__(self):
        if not 0 < self.f1 < self.f2:
            raise ParameterError("need 0 < f1 < f2")
        if not (self.duration > 0 and self.fs > 0):
            raise ParameterError("duration and fs must be positive")
        if self.fs <= 2 * self.f2:
            raise AliasingError(f"fs={self.fs} Hz cannot represent f2={self.f2} Hz")
        if self.fs <= 10 * self.f2:
            raise ParameterError(f"fs={self.fs} Hz must exceed ten times f2={self.f2} Hz")


SystemModel = SimpleOscillatorParams | RlcParams | StickSlipParams

# Reference parameter sets of the two benchmark systems; the simple system fixes
# omega0 = 2*pi*30 and epsilon = 0.1 only, so m = 1 kg.
SIMPLE_TABLE2 = SimpleOscillatorParams(m=1.0, beta=0.1, k=(2 * np.pi * 30.0) ** 2)
SIMPLE_CHIRP_TABLE2 = ChirpParams(amplitude=1e3, f1=20.0, f2=40.0, duration=10.0, fs=2000.0)
RLC_TABLE3 = RlcParams(L_nom=498e-6, L_ds=100e-6, i_star=0.7, sigma=100.0, C=9e-6, R=1.25)
RLC_VOLTAGES = (1.0, 3.0, 5.0, 20.0, 50.0)


def rlc_chirp_table3(voltage: float, duration: float = 10.0, fs: float = 100e3) -> ChirpParams:
    return ChirpParams(amplitude=voltage, f1=1500.0, f2=4500.0, duration=duration, fs=fs)


def chirp(p: ChirpParams) -> TimeSeries:
    """``A sin(2 pi f1 t + pi (f2 - f1) t**2 / T)``, sampled at ``p.fs``."""
    n = int(round(p.duration * p.fs))
    t = np.arange(n) / p.fs
    phase = 2 * np.pi * (p.f1 * t + 0.5 * (p.f2 - p.f1) * t ** 2 / p.duration)
    return TimeSeries(0.0, 1.0 / p.fs, p.amplitude * np.sin(phase))


def _refine(samples: np.ndarray, factor: int) -> np.ndarray:
    """Cubic Lagrange values on a grid ``factor`` times finer (last point appended)."""
    n = samples.size
    padded = np.concatenate((
        [3 * samples[0] - 3 * samples[1] + samples[2]],
        samples,
        [3 * samples[-1] - 3 * samples[-2] + samples[-3]] * 2,
    ))
    out = np.empty((n - 1) * factor + 1)
    idx = np.arange(n - 1)
    for j in range(factor):
        s = j / factor
        w0 = -s * (s - 1) * (s - 2) / 6
        w1 = (s + 1) * (s - 1) * (s - 2) / 2
        w2 = -(s + 1) * s * (s - 2) / 2
        w3 = (s + 1) * s * (s - 1) / 6
        out[j::factor][: n - 1] = (
            w0 * padded[idx] + w1 * padded[idx + 1] + w2 * padded[idx + 2] + w3 * padded[idx + 3]
        )
    out[-1] = samples[-1]
    return out


@numba.njit(cache=True)
def _simple_rhs(y, v, f, m, beta, c, k):
    return v, (f - c * v - k * y) / (m + beta * y * y)


@numba.njit(cache=True)
def _run_simple(force, n, substeps, h, y0, v0, m, beta, c, k, guard):
    out = np.empty(n)
    y, v = y0, v0
    out[0] = y
    for i in range(n - 1):
        for s in range(substeps):
            j = 2 * (i * substeps + s)
            fa, fm, fb = force[j], force[j + 1], force[j + 2]
            k1y, k1v = _simple_rhs(y, v, fa, m, beta, c, k)
            k2y, k2v = _simple_rhs(y + 0.5 * h * k1y, v + 0.5 * h * k1v, fm, m, beta, c, k)
            k3y, k3v = _simple_rhs(y + 0.5 * h * k2y, v + 0.5 * h * k2v, fm, m, beta, c, k)
            k4y, k4v = _simple_rhs(y + h * k3y, v + h * k3v, fb, m, beta, c, k)
            y += h * (k1y + 2 * k2y + 2 * k3y + k4y) / 6
            v += h * (k1v + 2 * k2v + 2 * k3v + k4v) / 6
        if not (abs(y) < guard and abs(v) < guard):
            return out, i + 1
        out[i + 1] = y
    return out, -1


def _fine_force(x: TimeSeries, substeps: int) -> np.ndarray:
    # RK4 needs the excitation at every half substep
    return _refine(x.samples, 2 * substeps)


def simulate_simple(
    p: SimpleOscillatorParams,
    x: TimeSeries,
    y0: float = 0.0,
    v0: float = 0.0,
    substeps: int = 4,
) -> TimeSeries:
    """Response of the simple variable-inertia oscillator to force ``x``.

    Raises
    ------
    DivergenceError
        If displacement or velocity exceed the overflow guard.
    """
    force = _fine_force(x, substeps)
    h = x.dt / substeps
    out, fail = _run_simple(force, len(x), substeps, h, float(y0), float(v0),
                            p.m, p.beta, p.c, p.k, OVERFLOW_GUARD)
    if fail >= 0:
        raise DivergenceError(f"simple oscillator diverged at t={x.t0 + fail * x.dt:.6g} s")
    return x.with_samples(out)


def inductance(i, p: RlcParams):
    """Current-dependent inductance with arctangent roll-off.

    Monotone non-increasing in ``i``: tends to ``L_nom`` for large negative
    currents and to ``L_ds`` for large positive ones.
    """
    i = np.asarray(i, dtype=float)
    out = p.L_ds + 0.5 * (p.L_nom - p.L_ds) * (1.0 - (2.0 / np.pi) * np.arctan(p.sigma * (i - p.i_star)))
    return out if out.ndim else float(out)


@numba.njit(cache=True)
def _rlc_rhs(q, i, e, L_nom, L_ds, i_star, sigma, C, R):
    # saturation acts on the current magnitude
    L = L_ds + 0.5 * (L_nom - L_ds) * (1.0 - (2.0 / np.pi) * np.arctan(sigma * (abs(i) - i_star)))
    return i, (e - R * i - q / C) / L


@numba.njit(cache=True)
def _run_rlc(volt, n, substeps, h, q0, i0, L_nom, L_ds, i_star, sigma, C, R, guard):
    qs = np.empty(n)
    cs = np.empty(n)
    q, i = q0, i0
    qs[0], cs[0] = q, i
    for step in range(n - 1):
        for s in range(substeps):
            j = 2 * (step * substeps + s)
            ea, em, eb = volt[j], volt[j + 1], volt[j + 2]
            k1q, k1i = _rlc_rhs(q, i, ea, L_nom, L_ds, i_star, sigma, C, R)
            k2q, k2i = _rlc_rhs(q + 0.5 * h * k1q, i + 0.5 * h * k1i, em, L_nom, L_ds, i_star, sigma, C, R)
            k3q, k3i = _rlc_rhs(q + 0.5 * h * k2q, i + 0.5 * h * k2i, em, L_nom, L_ds, i_star, sigma, C, R)
            k4q, k4i = _rlc_rhs(q + h * k3q, i + h * k3i, eb, L_nom, L_ds, i_star, sigma, C, R)
            q += h * (k1q + 2 * k2q + 2 * k3q + k4q) / 6
            i += h * (k1i + 2 * k2i + 2 * k3i + k4i) / 6
        if not (abs(q) < guard and abs(i) < guard):
            return qs, cs, step + 1
        qs[step + 1], cs[step + 1] = q, i
    return qs, cs, -1


def simulate_rlc(
    p: RlcParams,
    e: TimeSeries,
    q0: float = 0.0,
    i0: float = 0.0,
    substeps: int = 4,
) -> tuple[TimeSeries, TimeSeries]:
    """Charge and current of the saturating RLC circuit driven by voltage ``e``.

    Integrates ``L(|i|) q'' + R q' + q / C = e``.  In the normalisation
    ``C L q'' + R C q' + q = C e`` the charge is the generalised coordinate
    and ``k = 1 / C``.

    Returns
    -------
    charge, current : TimeSeries
    """
    volt = _fine_force(e, substeps)
    h = e.dt / substeps
    qs, cs, fail = _run_rlc(volt, len(e), substeps, h, float(q0), float(i0),
                            p.L_nom, p.L_ds, p.i_star, p.sigma, p.C, p.R, OVERFLOW_GUARD)
    if fail >= 0:
        raise DivergenceError(f"RLC simulation diverged at t={e.t0 + fail * e.dt:.6g} s")
    return e.with_samples(qs), e.with_samples(cs)


class StickSlipResponse(NamedTuple):
    x1: TimeSeries
    x2: TimeSeries
    stick: np.ndarray
    friction: np.ndarray


@numba.njit(cache=True)
def _ss_accel(x1, v1, v2, force, fric, m1, m2, k, c):
    return (force - c * v1 - k * x1 + fric) / m1, -fric / m2


@numba.njit(cache=True)
def _ss_lambda(x1, v1, force, m1, m2, k, c):
    # constraint force keeping x2' = x1'
    return (c * v1 + k * x1 - force) * m2 / (m1 + m2)


@numba.njit(cache=True)
def _ss_stage(x1, v1, x2, v2, force, stick, direction, limit, m1, m2, k, c):
    if stick:
        fric = _ss_lambda(x1, v1, force, m1, m2, k, c)
    else:
        fric = limit * direction
    a1, a2 = _ss_accel(x1, v1, v2, force, fric, m1, m2, k, c)
    return v1, a1, v2, a2


@numba.njit(cache=True)
def _run_stick_slip(force_f, n, substeps, h, state0, m1, m2, k, c, limit, tol, guard):
    out1 = np.empty(n)
    out2 = np.empty(n)
    stick_out = np.zeros(n, dtype=np.bool_)
    fric_out = np.empty(n)
    x1, v1, x2, v2 = state0[0], state0[1], state0[2], state0[3]
    stick = abs(v2 - v1) <= tol
    if stick:
        vm = (m1 * v1 + m2 * v2) / (m1 + m2)
        v1 = vm
        v2 = vm
    direction = 1.0 if v2 - v1 >= 0 else -1.0
    for step in range(n):
        fa = force_f[2 * step * substeps]
        lam = _ss_lambda(x1, v1, fa, m1, m2, k, c)
        # regime at the sample instant
        if stick and abs(lam) > limit:
            stick = False
            direction = 1.0 if lam > 0 else -1.0
        out1[step], out2[step] = x1, x2
        stick_out[step] = stick
        fric_out[step] = lam if stick else limit * direction
        if step == n - 1:
            break
        for s in range(substeps):
            j = 2 * (step * substeps + s)
            fa, fm, fb = force_f[j], force_f[j + 1], force_f[j + 2]
            lam = _ss_lambda(x1, v1, fa, m1, m2, k, c)
            if stick:
                if abs(lam) > limit:
                    stick = False
                    direction = 1.0 if lam > 0 else -1.0
            else:
                rel = v2 - v1
                if abs(rel) <= tol or rel * direction < 0:
                    if abs(lam) <= limit:
                        stick = True
                        vm = (m1 * v1 + m2 * v2) / (m1 + m2)
                        v1 = vm
                        v2 = vm
                    else:
                        direction = 1.0 if lam > 0 else -1.0
            k1x1, k1v1, k1x2, k1v2 = _ss_stage(x1, v1, x2, v2, fa, stick, direction, limit, m1, m2, k, c)
            k2x1, k2v1, k2x2, k2v2 = _ss_stage(x1 + 0.5 * h * k1x1, v1 + 0.5 * h * k1v1,
                                               x2 + 0.5 * h * k1x2, v2 + 0.5 * h * k1v2,
                                               fm, stick, direction, limit, m1, m2, k, c)
            k3x1, k3v1, k3x2, k3v2 = _ss_stage(x1 + 0.5 * h * k2x1, v1 + 0.5 * h * k2v1,
                                               x2 + 0.5 * h * k2x2, v2 + 0.5 * h * k2v2,
                                               fm, stick, direction, limit, m1, m2, k, c)
            k4x1, k4v1, k4x2, k4v2 = _ss_stage(x1 + h * k3x1, v1 + h * k3v1,
                                               x2 + h * k3x2, v2 + h * k3v2,
                                               fb, stick, direction, limit, m1, m2, k, c)
            x1 += h * (k1x1 + 2 * k2x1 + 2 * k3x1 + k4x1) / 6
            v1 += h * (k1v1 + 2 * k2v1 + 2 * k3v1 + k4v1) / 6
            x2 += h * (k1x2 + 2 * k2x2 + 2 * k3x2 + k4x2) / 6
            v2 += h * (k1v2 + 2 * k2v2 + 2 * k3v2 + k4v2) / 6
            if stick:
                # remove round-off drift from the constraint
                vm = (m1 * v1 + m2 * v2) / (m1 + m2)
                v1 = vm
                v2 = vm
        if not (abs(x1) < guard and abs(v1) < guard and abs(x2 - x1) < guard):
            return out1, out2, stick_out, fric_out, step + 1
    return out1, out2, stick_out, fric_out, -1


def simulate_stick_slip(
    p: StickSlipParams,
    F: TimeSeries,
    state0=(0.0, 0.0, 0.0, 0.0),
    substeps: int = 4,
) -> StickSlipResponse:
    """Two-mass stick-slip response to a force ``F`` acting on mass 1.

    The friction force equals the constraint force while it stays below
    ``mu m2 g`` and the masses share a velocity; otherwise it saturates at
    ``mu m2 g`` opposing the relative velocity.  The regime is re-evaluated
    at every substep; a sign change of the relative velocity during slip
    re-checks the stick condition and, if admissible, projects both masses
    onto their common momentum-conserving velocity.

    Parameters
    ----------
    state0 : sequence of 4 floats
        ``(x1, v1, x2, v2)`` at ``F.t0``.

    Returns
    -------
    StickSlipResponse
        ``x1``, ``x2`` displacements, the boolean ``stick`` flag and the
        friction force acting on mass 1, all sampled on the grid of ``F``.
    """
    force = _fine_force(F, substeps)
    h = F.dt / substeps
    st = np.asarray(state0, dtype=float)
    if st.shape != (4,):
        raise ParameterError("state0 must be (x1, v1, x2, v2)")
    x1, x2, stick, fric, fail = _run_stick_slip(
        force, len(F), substeps, h, st, p.m1, p.m2, p.k, p.c,
        p.friction_limit, p.vel_tol, OVERFLOW_GUARD,
    )
    if fail >= 0:
        raise DivergenceError(f"stick-slip simulation diverged at t={F.t0 + fail * F.dt:.6g} s")
    return StickSlipResponse(F.with_samples(x1), F.with_samples(x2), stick, fric)


def add_noise(x: TimeSeries, snr_db: float, seed: int) -> TimeSeries:
    """Add white Gaussian noise at the requested signal-to-noise ratio.

    The realised noise is rescaled so that its power is exactly
    ``mean(x**2) / 10**(snr_db / 10)``.  ``snr_db = inf`` returns ``x``.
    """
    if np.isposinf(snr_db):
        return x
    if not np.isfinite(snr_db):
        raise ParameterError("snr_db must be finite or +inf")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(len(x))
    p_signal = float(np.mean(x.samples ** 2))
    noise *= np.sqrt(p_signal / 10.0 ** (snr_db / 10.0) / np.mean(noise ** 2))
    return x.with_samples(x.samples + noise)
