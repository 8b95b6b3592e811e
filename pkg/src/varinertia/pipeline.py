"""End-to-end identification and noise studies.

Step order: largest HVD component of both channels, analytic records
(with the edge zones widened to cover the decomposition filter settling),
stiffness fit (unless ``k`` is given), per-sample modal parameters,
transient trimming.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NoDataError, ParameterError, TooShortError
from .identification import (
    DEFAULT_DRIFT_TOL,
    DEFAULT_EPS_DEN,
    DEFAULT_LOCK_TOL,
    DEFAULT_WINDOW_PERIODS,
    ModalTrajectory,
    StiffnessFit,
    compute_g_s,
    default_window_length,
    estimate_stiffness,
    identify_forcevibmod,
    trim_transients,
)
from .signal_core import (
    HVD_SETTLE_CYCLES,
    AnalyticRecord,
    HvdConfig,
    TimeSeries,
    check_aligned,
    hvd_largest_component,
    make_analytic,
)
from .simulators import add_noise


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable settings of :func:`identify`.

    Parameters
    ----------
    hvd : HvdConfig
        Decomposition settings, applied to both channels.
    window_length, stride : int or None
        Stiffness-fit windows in samples; ``None`` means
        ``window_periods`` response periods, non-overlapping.
    window_periods : float
        Default window span in response periods.  Fast sweeps over many
        cycles need longer windows for ``g`` and ``s`` to vary visibly.
    rate_threshold : float or None
        Transient threshold on ``|dA/dt| / A`` [1/s]; ``None`` means
        5 % of the median natural frequency.
    eps_den : float
        Relative floor below which the identification denominator is
        masked.
    lock_tol, drift_tol : float
        Window screening of the stiffness fit, see
        :func:`~varinertia.identification.estimate_stiffness`.
    use_hvd : bool
        Skip the decomposition when False (clean data only).
    amplitude_order : int
        Report amplitudes as the envelope of the response (0), of its
        first derivative (1) or of its second derivative (2).
    output_dir : str or None
        Where command-line runs write their files.
    """

    hvd: HvdConfig = field(default_factory=HvdConfig)
    window_length: int | None = None
    stride: int | None = None
    window_periods: float = DEFAULT_WINDOW_PERIODS
    rate_threshold: float | None = None
    eps_den: float = DEFAULT_EPS_DEN
    lock_tol: float = DEFAULT_LOCK_TOL
    drift_tol: float = DEFAULT_DRIFT_TOL
    use_hvd: bool = True
    amplitude_order: int = 0
    output_dir: str | None = None

    def __post_init__(self):
        for name in ("window_length", "stride", "rate_threshold"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ParameterError(f"{name} must be positive")
        for name in ("eps_den", "lock_tol", "drift_tol", "window_periods"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.amplitude_order not in (0, 1, 2):
            raise ParameterError("amplitude_order must be 0, 1 or 2")


@dataclass(frozen=True)
class IdentificationResult:
    """Everything :func:`identify` produced.

    ``trajectory`` is transient-trimmed; ``untrimmed`` is not.  ``fit`` is
    None when ``k`` was supplied by the caller.
    """

    k: float
    fit: StiffnessFit | None
    trajectory: ModalTrajectory
    untrimmed: ModalTrajectory
    excitation: AnalyticRecord = field(repr=False)
    response: AnalyticRecord = field(repr=False)


def _amplitude(rec: AnalyticRecord, order: int) -> np.ndarray:
    return rec.envelope if order == 0 else rec.derivative_envelope(order)


def identify(excitation: TimeSeries, response: TimeSeries,
             config: PipelineConfig | None = None, k: float | None = None) -> IdentificationResult:
    """Identify the amplitude-dependent modal parameters from one forced record."""
    cfg = config or PipelineConfig()
    check_aligned(excitation, response)
    trim = cfg.hvd.edge_trim_fraction
    if cfg.use_hvd:
        x_part, _, fc_x = hvd_largest_component(excitation, cfg.hvd, return_cutoff=True)
        y_part, _, fc_y = hvd_largest_component(response, cfg.hvd, return_cutoff=True)
        # samples where the decomposition filter is still settling are unreliable
        settle = HVD_SETTLE_CYCLES / min(fc_x, fc_y) / (len(response) * response.dt)
        if settle >= 0.5:
            raise TooShortError(f"record too short for the {min(fc_x, fc_y):.6g} Hz decomposition "
                                "low-pass to settle")
        trim = max(trim, settle)
    else:
        x_part, y_part = excitation, response
    xr = make_analytic(x_part, trim)
    yr = make_analytic(y_part, trim)
    fit = None
    if k is None:
        gs = compute_g_s(xr, yr, cfg.eps_den, cfg.lock_tol)
        length = cfg.window_length or default_window_length(gs, cfg.window_periods)
        fit = estimate_stiffness(gs, length, cfg.stride, drift_tol=cfg.drift_tol)
        k = fit.k
    raw = identify_forcevibmod(xr, yr, k, cfg.eps_den, amplitude=_amplitude(yr, cfg.amplitude_order))
    trimmed = trim_transients(raw, cfg.rate_threshold)
    return IdentificationResult(k=float(k), fit=fit, trajectory=trimmed, untrimmed=raw,
                                excitation=xr, response=yr)


def amplitude_bins(amplitude: np.ndarray, bins: int = 60, log: bool = True) -> np.ndarray:
    """Bin edges spanning the given amplitudes."""
    a = np.asarray(amplitude, dtype=float)
    a = a[np.isfinite(a) & (a > 0)]
    if a.size == 0:
        raise NoDataError("no positive amplitudes to bin")
    lo, hi = a.min(), a.max()
    if hi <= lo:
        hi = lo * (1 + 1e-9)
    return np.geomspace(lo, hi, bins + 1) if log else np.linspace(lo, hi, bins + 1)


def binned_median(traj: ModalTrajectory, edges: np.ndarray) -> np.ndarray:
    """Median natural frequency of the valid samples in each amplitude bin, NaN when empty."""
    a, w, _ = traj.selected()
    idx = np.searchsorted(edges, a, side="right") - 1
    idx[a == edges[-1]] = edges.size - 2
    out = np.full(edges.size - 1, np.nan)
    inside = (idx >= 0) & (idx < edges.size - 1)
    order = np.argsort(idx[inside], kind="stable")
    ids, ws = idx[inside][order], w[inside][order]
    bounds = np.flatnonzero(np.diff(ids)) + 1
    for chunk_i, chunk_w in zip(np.split(ids, bounds), np.split(ws, bounds)):
        if chunk_i.size:
            out[chunk_i[0]] = np.median(chunk_w)
    return out


@dataclass(frozen=True)
class NoiseEnvelope:
    """Spread of the identified backbone over noisy trials at one SNR.

    Arrays are per amplitude bin (``centres``); ``clean`` is the noise-free
    backbone and ``count`` the number of trials with data in each bin.
    """

    snr_db: float
    centres: np.ndarray
    clean: np.ndarray
    omega_min: np.ndarray
    omega_max: np.ndarray
    omega_median: np.ndarray
    count: np.ndarray
    trials: int

    def max_deviation(self) -> float:
        """Largest relative distance of the min/max curves from the clean one."""
        ok = np.isfinite(self.clean) & (self.count > 0)
        if not np.any(ok):
            return float("nan")
        dev = np.maximum(np.abs(self.omega_max[ok] - self.clean[ok]),
                         np.abs(self.omega_min[ok] - self.clean[ok])) / self.clean[ok]
        return float(np.max(dev))

    def contains_clean(self, rtol: float = 0.0) -> bool:
        ok = np.isfinite(self.clean) & (self.count > 0)
        c = self.clean[ok]
        return bool(np.all((self.omega_min[ok] <= c * (1 + rtol)) & (self.omega_max[ok] >= c * (1 - rtol))))


def _trial(args):
    excitation, response, snr_db, seed, cfg, k, edges = args
    seq = np.random.SeedSequence(seed)
    sx, sy = (int(s.generate_state(1)[0]) for s in seq.spawn(2))
    noisy_x = add_noise(excitation, snr_db, sx)
    noisy_y = add_noise(response, snr_db, sy)
    res = identify(noisy_x, noisy_y, cfg, k)
    return binned_median(res.trajectory, edges)


def trial_seed(base_seed: int, snr_index: int, trial: int) -> int:
    """Deterministic per-trial seed, independent of execution order."""
    seq = np.random.SeedSequence([int(base_seed), int(snr_index), int(trial)])
    return int(seq.generate_state(1)[0])


def noise_study(excitation: TimeSeries, response: TimeSeries, snr_list, trials: int,
                seed: int = 0, config: PipelineConfig | None = None, k: float | None = None,
                bins: int = 60, workers: int | None = None,
                refit_k: bool = False) -> list[NoiseEnvelope]:
    """Repeat the identification under independent white noise on both channels.

    For every SNR, ``trials`` noisy copies of the record are identified and
    the per-bin median natural frequencies are reduced to their minimum,
    maximum and median across trials.  Bins span the amplitude range of
    the clean identification.  Results depend only on ``seed``, not on
    ``workers``.

    The stiffness is a constant of the system, so by default every trial
    reuses ``k`` (or the one fitted on the clean record) and the study
    measures the per-sample identification alone.  ``refit_k=True`` fits
    ``k`` again on every noisy record instead.
    """
    if int(trials) < 2:
        raise ParameterError("need at least two trials")
    cfg = config or PipelineConfig()
    clean = identify(excitation, response, cfg, k)
    trial_k = None if refit_k else clean.k
    edges = amplitude_bins(clean.trajectory.selected()[0], bins)
    clean_curve = binned_median(clean.trajectory, edges)
    centres = np.sqrt(edges[:-1] * edges[1:])
    if workers is None:
        workers = min(os.cpu_count() or 1, 8)

    out = []
    for j, snr in enumerate(snr_list):
        jobs = [(excitation, response, float(snr), trial_seed(seed, j, i), cfg, trial_k, edges)
                for i in range(int(trials))]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                curves = list(pool.map(_trial, jobs))
        else:
            curves = [_trial(job) for job in jobs]
        stack = np.vstack(curves)
        count = np.sum(np.isfinite(stack), axis=0)
        with warnings.catch_warnings():
            # all-NaN columns are expected for bins no trial reached
            warnings.simplefilter("ignore", RuntimeWarning)
            lo = np.nanmin(stack, axis=0)
            hi = np.nanmax(stack, axis=0)
            med = np.nanmedian(stack, axis=0)
        out.append(NoiseEnvelope(snr_db=float(snr), centres=centres, clean=clean_curve,
                                 omega_min=lo, omega_max=hi, omega_median=med,
                                 count=count, trials=int(trials)))
    return out
