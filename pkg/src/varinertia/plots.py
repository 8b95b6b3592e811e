"""Static SVG figures for backbones and noise envelopes."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no date stamp keep repeated runs byte-identical
matplotlib.rcParams["svg.hashsalt"] = "varinertia"
_SVG_META = {"Date": None}
# raw samples shown per run; more only bloats the vector file
MAX_RUN_POINTS = 2000


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def plot_backbone(curve, path_freq, path_damping, overlays=None, amplitude_label="amplitude",
                  runs=None) -> tuple[Path, Path]:
    """Frequency and damping backbones, frequencies in Hz.

    ``overlays`` maps a legend label to ``(amplitude, omega_n)`` arrays
    drawn as reference lines on the frequency plot.  ``runs`` maps labels
    to individual ModalTrajectory objects shown as faint points.
    """
    figs = []
    for quantity, path in (("omega_n", path_freq), ("h", path_damping)):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, traj in (runs or {}).items():
            a, w, h = traj.selected()
            step = max(1, a.size // MAX_RUN_POINTS)
            a, w, h = a[::step], w[::step], h[::step]
            ax.plot(a, w / (2 * np.pi) if quantity == "omega_n" else h, ".", ms=1, alpha=0.3, label=label)
        values = curve.omega_n / (2 * np.pi) if quantity == "omega_n" else curve.h
        ax.plot(curve.amplitude, values, "k-", lw=1.5, label="identified")
        if quantity == "omega_n":
            for label, (a, w) in (overlays or {}).items():
                ax.plot(a, np.asarray(w) / (2 * np.pi), "--", lw=1.2, label=label)
            ax.set_ylabel("natural frequency [Hz]")
        else:
            ax.set_ylabel("damping coefficient h [1/s]")
        ax.set_xlabel(amplitude_label)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7)
        fig.tight_layout()
        figs.append(_save(fig, path))
    return figs[0], figs[1]


def plot_noise_envelopes(envelopes, path) -> Path:
    """Min-max band per SNR around the clean backbone."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for env in envelopes:
        ok = env.count > 0
        ax.fill_between(env.centres[ok], env.omega_min[ok] / (2 * np.pi), env.omega_max[ok] / (2 * np.pi),
                        alpha=0.3, label=f"{env.snr_db:g} dB")
    if envelopes:
        env = envelopes[0]
        ax.plot(env.centres, env.clean / (2 * np.pi), "k-", lw=1.2, label="clean")
    ax.set_xscale("log")
    ax.set_xlabel("amplitude")
    ax.set_ylabel("natural frequency [Hz]")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)
