"""Forced-response identification of variable-inertia oscillators.

The stiffness-normalised model ``T^2 y'' + 2 chi y' + y = x / k`` is put
in analytic form and split into real and imaginary parts, which gives
``T^2`` and ``chi`` sample by sample once the constant stiffness ``k`` is
known.  ``k`` itself follows from the straight line
``g = -s / k + T^2`` fitted over many short windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InsufficientExcitationError, NoDataError, ParameterError
from .signal_core import AnalyticRecord, check_aligned, differentiate

DEFAULT_EPS_DEN = 1e-3
DEFAULT_WINDOW_PERIODS = 5.0
DEFAULT_LOCK_TOL = 0.05
DEFAULT_DRIFT_TOL = 0.03


@dataclass(frozen=True)
class GsSeries:
    """Per-sample line coordinates ``g`` and ``s``.

    ``denominator`` is the shared determinant ``y'' H[y]' - y' H[y]''``;
    ``omega_ref`` the median response frequency [rad/s] over valid samples.
    ``locked`` flags samples where the response follows the excitation
    frequency; ``None`` means every sample counts as locked.
    """

    g: np.ndarray = field(repr=False)
    s: np.ndarray = field(repr=False)
    denominator: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)
    dt: float
    omega_ref: float
    locked: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class StiffnessFit:
    """Result of :func:`estimate_stiffness`.

    ``window_count`` windows entered the final fit out of
    ``windows_considered`` admissible ones; ``k_initial`` is the seed.
    """

    k: float
    window_count: int
    window_length: int
    objective: float
    per_window_intercepts: np.ndarray = field(repr=False)
    k_initial: float = float("nan")
    windows_considered: int = 0


@dataclass(frozen=True)
class ModalTrajectory:
    """Instantaneous modal estimates, one entry per sample.

    Where ``valid`` is True, ``omega_n**2 * T2 == 1`` and ``h * T2 == chi``.
    """

    t: np.ndarray = field(repr=False)
    amplitude: np.ndarray = field(repr=False)
    T2: np.ndarray = field(repr=False)
    chi: np.ndarray = field(repr=False)
    omega_n: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)

    def __len__(self):
        return self.t.size

    def selected(self):
        """Tuple ``(amplitude, omega_n, h)`` restricted to valid samples."""
        v = self.valid
        return self.amplitude[v], self.omega_n[v], self.h[v]


@dataclass(frozen=True)
class BackboneCurve:
    amplitude: np.ndarray
    omega_n: np.ndarray
    h: np.ndarray
    n_samples: np.ndarray
    source_run_ids: tuple = ()


def _denominator(y: AnalyticRecord) -> np.ndarray:
    return y.d2 * y.d1_h - y.d1 * y.d2_h


def compute_g_s(x: AnalyticRecord, y: AnalyticRecord, eps_den: float = DEFAULT_EPS_DEN,
                lock_tol: float = DEFAULT_LOCK_TOL) -> GsSeries:
    """Line coordinates ``g`` and ``s`` from excitation ``x`` and response ``y``.

    Samples whose denominator magnitude is below ``eps_den`` times its
    median, or that lie in an unreliable edge zone of either record, are
    marked invalid.  Samples where the instantaneous frequencies of ``x``
    and ``y`` differ by more than ``lock_tol`` relative are left valid but
    not ``locked``; only locked samples inform the stiffness fit.
    """
    check_aligned(x.base, y.base)
    den = _denominator(y)
    reliable = x.reliable & y.reliable
    mag = np.abs(den)
    ref = np.median(mag[reliable]) if np.any(reliable) else np.median(mag)
    ok = reliable & (mag > eps_den * ref)
    safe = np.where(ok, den, 1.0)
    g = np.where(ok, (y.hilbert * y.d1 - y.signal * y.d1_h) / safe, np.nan)
    s = np.where(ok, (x.signal * y.d1_h - x.hilbert * y.d1) / safe, np.nan)
    omega = np.abs(y.inst_freq[ok])
    locked = np.abs(y.inst_freq - x.inst_freq) <= lock_tol * np.abs(x.inst_freq)
    return GsSeries(
        g=g, s=s, denominator=den, valid=ok, dt=y.dt,
        omega_ref=float(np.median(omega)) if omega.size else float("nan"),
        locked=locked,
    )


def default_window_length(gs: GsSeries, periods: float = DEFAULT_WINDOW_PERIODS) -> int:
    if not np.isfinite(gs.omega_ref) or gs.omega_ref <= 0:
        raise InsufficientExcitationError("no valid samples to infer a response period")
    return max(8, int(round(periods * 2 * np.pi / gs.omega_ref / gs.dt)))


def _windows(gs: GsSeries, window_length: int, stride: int, min_valid: float = 0.9):
    """Mean-centred ``(s, g, t)`` triples of every admissible window."""
    n = gs.g.size
    usable = gs.valid if gs.locked is None else gs.valid & gs.locked
    tt = np.arange(window_length) * gs.dt
    centred = []
    for start in range(0, n - window_length + 1, stride):
        sl = slice(start, start + window_length)
        ok = usable[sl]
        if ok.sum() < max(3, min_valid * window_length):
            continue
        s = gs.s[sl][ok]
        g = gs.g[sl][ok]
        t = tt[ok]
        centred.append((s - s.mean(), g - g.mean(), t - t.mean(), s.mean(), g.mean()))
    return centred


def orthogonal_objective(k: float, s_c: np.ndarray, g_c: np.ndarray) -> float:
    """Sum of squared perpendicular distances to the line of slope ``-1/k`` through the origin."""
    u = 1.0 / k
    return float(np.sum((g_c + u * s_c) ** 2) / (1.0 + u * u))


def _drift_ratio(win, k: float) -> float:
    # trend of the implied T^2 = g + s/k relative to the trend of g
    s_c, g_c, t_c = win[:3]
    tt = float(np.dot(t_c, t_c))
    slope_g = np.dot(t_c, g_c) / tt
    slope_T2 = slope_g + np.dot(t_c, s_c) / tt / k
    return abs(slope_T2) / abs(slope_g) if slope_g != 0 else np.inf


def _fit_windows(wins, k_ref: float, rtol: float) -> float:
    s_c = np.concatenate([w[0] for w in wins])
    g_c = np.concatenate([w[1] for w in wins])
    # search in log k keeps the bracket symmetric and the tolerance relative
    res = minimize_scalar(
        lambda lk: orthogonal_objective(np.exp(lk), s_c, g_c),
        bounds=(np.log(k_ref / 10.0), np.log(k_ref * 10.0)),
        method="bounded",
        options={"xatol": rtol, "maxiter": 500},
    )
    k = float(np.exp(res.x))
    # the search stalls near sqrt(machine eps) on the flat minimum; the
    # closed-form normal (smallest eigenvector of the scatter) is exact
    scatter = np.array([[s_c @ s_c, s_c @ g_c], [s_c @ g_c, g_c @ g_c]])
    a, b = np.linalg.eigh(scatter)[1][:, 0]
    if a != 0 and k_ref / 10.0 <= b / a <= k_ref * 10.0:
        k_exact = float(b / a)
        if orthogonal_objective(k_exact, s_c, g_c) <= orthogonal_objective(k, s_c, g_c):
            k = k_exact
    return k


def estimate_stiffness(gs: GsSeries, window_length: int | None = None, stride: int | None = None,
                       rtol: float = 1e-10, drift_tol: float = DEFAULT_DRIFT_TOL,
                       max_iter: int = 20) -> StiffnessFit:
    """Fit the constant stiffness ``k`` by multi-window orthogonal regression.

    Each window is mean-centred so that only the common slope ``-1/k`` is
    fitted.  The variable-inertia model holds ``T^2`` nearly constant
    inside a window, so windows in which the implied ``T^2 = g + s/k``
    trends by more than ``drift_tol`` times the trend of ``g`` violate the
    model (free transients, a response that does not follow the
    excitation, strong amplitude growth) and are screened out.  Starting
    from the median of the per-window slopes, screening and fitting
    alternate until the kept set stops changing.  The fit itself is a
    bounded scalar search on ``[k_ls / 10, 10 k_ls]``, with ``k_ls`` the
    least-squares slope over the kept windows, polished with the
    closed-form orthogonal solution.

    Raises
    ------
    InsufficientExcitationError
        If fewer than two windows are usable or ``s`` does not vary within
        any window; the excitation must sweep the response frequency.
    """
    if window_length is None:
        window_length = default_window_length(gs)
    window_length = int(window_length)
    stride = window_length if stride is None else int(stride)
    if window_length < 3 or stride < 1:
        raise ParameterError("window_length must be >= 3 and stride >= 1")
    if not drift_tol > 0:
        raise ParameterError("drift_tol must be positive")

    wins = _windows(gs, window_length, stride)
    usable = gs.valid if gs.locked is None else gs.valid & gs.locked
    scale = np.nanmedian(np.abs(gs.s[usable])) if np.any(usable) else 0.0
    wins = [w for w in wins if np.std(w[0]) > 1e-9 * max(scale, np.finfo(float).tiny)]
    local = np.array([-np.dot(w[0], w[0]) / np.dot(w[0], w[1]) for w in wins])
    local = local[np.isfinite(local) & (local > 0)]
    if len(wins) < 2 or local.size == 0:
        raise InsufficientExcitationError(
            f"only {len(wins)} window(s) with varying s; use an excitation whose "
            "frequency varies in time (for instance a slow swept sine)"
        )
    k_seed = float(np.median(local))

    k = k_seed
    kept_ids = None
    for _ in range(max_iter):
        ids = tuple(i for i, w in enumerate(wins) if _drift_ratio(w, k) <= drift_tol)
        if len(ids) < 2:
            raise InsufficientExcitationError(
                f"only {len(ids)} window(s) consistent with a constant stiffness; "
                "the response must follow a slowly swept excitation"
            )
        if ids == kept_ids:
            break
        kept_ids = ids
        kept = [wins[i] for i in ids]
        s_c = np.concatenate([w[0] for w in kept])
        g_c = np.concatenate([w[1] for w in kept])
        sg = float(np.dot(s_c, g_c))
        if not sg < 0:
            raise InsufficientExcitationError("fitted slope is not negative; stiffness is undefined")
        k = _fit_windows(kept, -float(np.dot(s_c, s_c)) / sg, rtol)

    kept = [wins[i] for i in kept_ids]
    s_c = np.concatenate([w[0] for w in kept])
    g_c = np.concatenate([w[1] for w in kept])
    return StiffnessFit(
        k=k,
        window_count=len(kept),
        window_length=window_length,
        objective=orthogonal_objective(k, s_c, g_c),
        per_window_intercepts=np.array([w[4] + w[3] / k for w in kept]),
        k_initial=k_seed,
        windows_considered=len(wins),
    )


def _modal(t, amplitude, T2, chi, valid) -> ModalTrajectory:
    valid = valid & np.isfinite(T2) & np.isfinite(chi) & (T2 > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        omega_n = np.where(valid, 1.0 / np.sqrt(np.where(valid, T2, 1.0)), np.nan)
        h = np.where(valid, chi / np.where(valid, T2, 1.0), np.nan)
    return ModalTrajectory(t=t, amplitude=np.asarray(amplitude, dtype=float), T2=T2, chi=chi,
                           omega_n=omega_n, h=h, valid=valid)


def identify_forcevibmod(x: AnalyticRecord, y: AnalyticRecord, k: float,
                         eps_den: float = DEFAULT_EPS_DEN, amplitude=None) -> ModalTrajectory:
    """Instantaneous ``T^2``, ``chi``, ``omega_n`` and ``h`` for a variable-inertia system.

    Parameters
    ----------
    x, y : AnalyticRecord
        Excitation and response.
    k : float
        Constant stiffness, e.g. from :func:`estimate_stiffness`.
    amplitude : array_like, optional
        Amplitude to report against, defaults to the envelope of ``y``.
        Useful to report current amplitude while identifying on charge.
    """
    if not k > 0:
        raise ParameterError(f"stiffness must be positive, got {k}")
    gs = compute_g_s(x, y, eps_den)
    ok = gs.valid
    den = np.where(ok, gs.denominator, 1.0)
    T2 = np.where(ok, gs.s / k + gs.g, np.nan)
    chi = np.where(
        ok,
        ((x.hilbert * y.d2 - x.signal * y.d2_h) / k + (y.signal * y.d2_h - y.hilbert * y.d2)) / (2.0 * den),
        np.nan,
    )
    amp = y.envelope if amplitude is None else amplitude
    return _modal(y.t, amp, T2, chi, ok)


def identify_forcevib(x: AnalyticRecord, y: AnalyticRecord, m: float,
                      eps_den: float = DEFAULT_EPS_DEN, amplitude=None) -> ModalTrajectory:
    """Mass-normalised identification for constant-inertia systems.

    Solves ``Y'' + 2 h Y' + omega_n^2 Y = X / m`` sample by sample.  The
    curvature terms carry a minus sign:
    ``omega_n^2 = (x H[y]' - H[x] y') / (m D) - (y'' H[y]' - H[y]'' y') / D``
    and ``2h = (H[x] y - x H[y]) / (m D) - (y H[y]'' - H[y] y'') / D`` with
    ``D = y H[y]' - H[y] y'``.
    """
    if not m > 0:
        raise ParameterError(f"mass must be positive, got {m}")
    check_aligned(x.base, y.base)
    D = y.signal * y.d1_h - y.hilbert * y.d1
    reliable = x.reliable & y.reliable
    mag = np.abs(D)
    ref = np.median(mag[reliable]) if np.any(reliable) else np.median(mag)
    ok = reliable & (mag > eps_den * ref)
    Ds = np.where(ok, D, 1.0)
    wn2 = (x.signal * y.d1_h - x.hilbert * y.d1) / (m * Ds) - (y.d2 * y.d1_h - y.d2_h * y.d1) / Ds
    two_h = (x.hilbert * y.signal - x.signal * y.hilbert) / (m * Ds) - (y.signal * y.d2_h - y.hilbert * y.d2) / Ds
    ok = ok & (wn2 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        T2 = np.where(ok, 1.0 / wn2, np.nan)
    chi = np.where(ok, 0.5 * two_h * T2, np.nan)
    amp = y.envelope if amplitude is None else amplitude
    return _modal(y.t, amp, T2, chi, ok)


def trim_transients(traj: ModalTrajectory, rate_threshold: float | None = None) -> ModalTrajectory:
    """Invalidate samples whose relative envelope rate ``|A'|/A`` exceeds the threshold.

    The default threshold is ``0.05 * median(omega_n)`` over valid samples.
    """
    if rate_threshold is None:
        wn = traj.omega_n[traj.valid]
        if wn.size == 0:
            return traj
        rate_threshold = 0.05 * float(np.median(wn))
    dt = float(traj.t[1] - traj.t[0])
    amp = traj.amplitude
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.abs(differentiate(amp, dt)) / amp
    keep = np.isfinite(rate) & (rate <= rate_threshold)
    return replace(traj, valid=traj.valid & keep)


def stitch_backbone(runs, bins: int | None = 200, log_bins: bool = True) -> BackboneCurve:
    """Merge the valid samples of several runs into one backbone curve.

    With ``bins=None`` the pooled valid samples are returned sorted by
    amplitude.  Otherwise samples are grouped into amplitude bins
    (log-spaced by default); each run contributes its per-bin median and
    runs sharing a bin are averaged with weights equal to their sample
    counts, so a run that only grazes a bin cannot dominate it.  Empty
    bins are dropped, so gaps between disjoint runs stay gaps.
    """
    runs = list(runs)
    if not runs:
        raise NoDataError("no runs to stitch")
    pooled = []
    for rid, run in enumerate(runs):
        a, w, h = run.selected()
        ok = np.isfinite(a) & np.isfinite(w) & np.isfinite(h) & (a > 0)
        if np.any(ok):
            pooled.append((rid, a[ok], w[ok], h[ok]))
    if not pooled:
        raise NoDataError("runs contain no valid samples")

    if bins is None:
        a = np.concatenate([p[1] for p in pooled])
        w = np.concatenate([p[2] for p in pooled])
        h = np.concatenate([p[3] for p in pooled])
        ids = np.concatenate([np.full(p[1].size, p[0]) for p in pooled])
        order = np.argsort(a, kind="stable")
        return BackboneCurve(a[order], w[order], h[order], np.ones(a.size, dtype=int),
                             tuple((int(i),) for i in ids[order]))

    lo = min(p[1].min() for p in pooled)
    hi = max(p[1].max() for p in pooled)
    if hi <= lo:
        hi = lo * (1 + 1e-9) + 1e-300
    edges = np.geomspace(lo, hi, bins + 1) if log_bins else np.linspace(lo, hi, bins + 1)
    per_bin = [[] for _ in range(bins)]
    for rid, a, w, h in pooled:
        idx = np.clip(np.searchsorted(edges, a, side="right") - 1, 0, bins - 1)
        order = np.argsort(idx, kind="stable")
        idx, a, w, h = idx[order], a[order], w[order], h[order]
        splits = np.flatnonzero(np.diff(idx)) + 1
        for chunk in np.split(np.arange(idx.size), splits):
            b = idx[chunk[0]]
            per_bin[b].append((rid, np.median(a[chunk]), np.median(w[chunk]), np.median(h[chunk]), chunk.size))
    amp, wn, hh, cnt, src = [], [], [], [], []
    for entries in per_bin:
        if not entries:
            continue
        weight = np.array([e[4] for e in entries], dtype=float)
        amp.append(np.average([e[1] for e in entries], weights=weight))
        wn.append(np.average([e[2] for e in entries], weights=weight))
        hh.append(np.average([e[3] for e in entries], weights=weight))
        cnt.append(int(weight.sum()))
        src.append(tuple(e[0] for e in entries))
    return BackboneCurve(np.array(amp), np.array(wn), np.array(hh), np.array(cnt), tuple(src))
