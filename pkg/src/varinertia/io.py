"""CSV and manifest files.

All writers format floats with ``%.17g`` so a value survives a round trip
bit for bit, and identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, NoDataError, SchemaError
from .identification import BackboneCurve, ModalTrajectory
from .oracles import BackboneSample
from .signal_core import TimeSeries

TIMESERIES_HEADER = ("t", "value")
MODAL_HEADER = ("t", "amplitude", "T2", "chi", "omega_n", "h", "valid")
BACKBONE_HEADER = ("amplitude", "omega_n", "h", "n_samples")
ORACLE_HEADER = ("amplitude", "omega_n")
NOISE_HEADER = ("snr_db", "amplitude", "clean", "omega_min", "omega_max", "omega_median", "count", "trials")

FLOAT_FORMAT = "%.17g"
# relative tolerance on the sampling step read back from a text file
DT_RTOL = 1e-6


def _write(path, header, columns, formats) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack([np.asarray(c, dtype=float) for c in columns]) if columns else np.empty((0, 0))
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        if table.size:
            np.savetxt(fh, table, fmt=formats, delimiter=",")
    return path


def _read(path, header) -> np.ndarray:
    path = Path(path)
    try:
        with open(path) as fh:
            first = fh.readline()
            if not first:
                raise NoDataError(f"{path} is empty")
            found = tuple(col.strip() for col in first.strip().split(","))
            if found != tuple(header):
                raise SchemaError(f"{path}: expected header {','.join(header)!r}, found {first.strip()!r}")
            try:
                with warnings.catch_warnings():
                    # a header without rows is reported as NoDataError below
                    warnings.simplefilter("ignore", UserWarning)
                    data = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=float)
            except ValueError as exc:
                raise InvalidInputError(f"{path}: {exc}") from None
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from None
    if data.size == 0:
        raise NoDataError(f"{path} has a header but no rows")
    if data.shape[1] != len(header):
        raise SchemaError(f"{path}: expected {len(header)} columns, found {data.shape[1]}")
    return data


def write_timeseries(path, x: TimeSeries) -> Path:
    """Write ``t,value`` rows."""
    return _write(path, TIMESERIES_HEADER, [x.t, x.samples], FLOAT_FORMAT)


def read_timeseries(path) -> TimeSeries:
    """Read a ``t,value`` file; the time column must be uniformly spaced.

    Raises
    ------
    SchemaError
        Wrong header or column count.
    NoDataError
        Empty file.
    InvalidInputError
        Non-numeric cells or non-uniform time steps.
    """
    data = _read(path, TIMESERIES_HEADER)
    t, v = data[:, 0], data[:, 1]
    if t.size < 2:
        raise InvalidInputError(f"{path}: need at least two samples to infer the time step")
    dt = (t[-1] - t[0]) / (t.size - 1)
    if not dt > 0 or np.max(np.abs(np.diff(t) - dt)) > DT_RTOL * dt:
        raise InvalidInputError(f"{path}: time column is not uniformly increasing")
    return TimeSeries(float(t[0]), float(dt), v)


def write_modal(path, traj: ModalTrajectory) -> Path:
    cols = [traj.t, traj.amplitude, traj.T2, traj.chi, traj.omega_n, traj.h, traj.valid.astype(float)]
    return _write(path, MODAL_HEADER, cols, [FLOAT_FORMAT] * 6 + ["%d"])


def read_modal(path) -> ModalTrajectory:
    d = _read(path, MODAL_HEADER)
    return ModalTrajectory(t=d[:, 0], amplitude=d[:, 1], T2=d[:, 2], chi=d[:, 3],
                           omega_n=d[:, 4], h=d[:, 5], valid=d[:, 6] != 0)


def write_backbone(path, curve: BackboneCurve) -> Path:
    cols = [curve.amplitude, curve.omega_n, curve.h, curve.n_samples]
    return _write(path, BACKBONE_HEADER, cols, [FLOAT_FORMAT] * 3 + ["%d"])


def read_backbone(path) -> BackboneCurve:
    d = _read(path, BACKBONE_HEADER)
    return BackboneCurve(amplitude=d[:, 0], omega_n=d[:, 1], h=d[:, 2], n_samples=d[:, 3].astype(int))


def write_oracle(path, samples) -> Path:
    """Write reference backbone samples as ``amplitude,omega_n``."""
    samples = list(samples)
    cols = [[s.amplitude for s in samples], [s.omega_n for s in samples]]
    return _write(path, ORACLE_HEADER, cols, FLOAT_FORMAT)


def read_oracle(path) -> list[BackboneSample]:
    d = _read(path, ORACLE_HEADER)
    return [BackboneSample(float(a), float(w)) for a, w in d]


def write_noise_envelopes(path, envelopes) -> Path:
    """One row per (SNR, amplitude bin); empty bins are written as ``nan``."""
    cols = [[] for _ in NOISE_HEADER]
    for env in envelopes:
        n = env.centres.size
        for col, values in zip(cols, (np.full(n, env.snr_db), env.centres, env.clean, env.omega_min,
                                      env.omega_max, env.omega_median, env.count, np.full(n, env.trials))):
            col.append(np.asarray(values, dtype=float))
    cols = [np.concatenate(c) for c in cols]
    return _write(path, NOISE_HEADER, cols, [FLOAT_FORMAT] * 6 + ["%d", "%d"])


def read_noise_envelopes(path) -> np.ndarray:
    """The noise-envelope table as a structured array keyed by column name."""
    d = _read(path, NOISE_HEADER)
    return np.rec.fromarrays(d.T, names=list(NOISE_HEADER))


def write_manifest(directory, payload: dict) -> Path:
    """Write ``manifest.json`` with sorted keys and no timestamps."""
    path = Path(directory) / "manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def read_manifest(directory) -> dict:
    return json.loads((Path(directory) / "manifest.json").read_text())


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")
