"""Scenario files: which system to simulate, how to excite it, how to identify it.

A scenario is an INI file with the sections ``[scenario]``, ``[params]``,
``[excitation]``, ``[initial]``, ``[noise]`` and ``[pipeline]``; only the
first three are required.  Every diagnostic names the offending key and,
when it comes from the file, its line number.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParameterError
from .pipeline import PipelineConfig
from .signal_core import HvdConfig, TimeSeries
from .simulators import (
    ChirpParams,
    RlcParams,
    SimpleOscillatorParams,
    StickSlipParams,
    add_noise,
    chirp,
    simulate_rlc,
    simulate_simple,
    simulate_stick_slip,
)

SYSTEMS = ("simple", "rlc", "stick_slip")

_PARAM_KEYS = {
    "simple": {"m": "m", "beta": "beta", "k": "k", "c": "c"},
    "rlc": {"l_nom": "L_nom", "l_ds": "L_ds", "i_star": "i_star", "sigma": "sigma", "c": "C", "r": "R"},
    "stick_slip": {"m1": "m1", "m2": "m2", "k": "k", "c": "c", "mu": "mu", "g": "g", "vel_tol": "vel_tol"},
}
_PARAM_DEFAULTS = {"simple": {"c": 0.0}, "rlc": {}, "stick_slip": None}
_INITIAL_KEYS = {
    "simple": ("y0", "v0"),
    "rlc": ("q0", "i0"),
    "stick_slip": ("x1", "v1", "x2", "v2"),
}
_EXCITATION_KEYS = ("amplitude", "f1", "f2", "duration", "fs")
_HVD_KEYS = {"lowpass_cutoff_hz": float, "demod_iterations": int, "edge_trim_fraction": float,
             "band_limit": bool}
_PIPELINE_KEYS = {"window_length": int, "stride": int, "window_periods": float, "rate_threshold": float,
                  "eps_den": float, "lock_tol": float, "drift_tol": float, "use_hvd": bool,
                  "amplitude_order": int, "stiffness": float}
_SECTIONS = {
    "scenario": {"name", "system", "seed"},
    "params": None,  # depends on the system
    "excitation": set(_EXCITATION_KEYS),
    "initial": None,
    "noise": {"snr_db", "seed"},
    "pipeline": set(_HVD_KEYS) | set(_PIPELINE_KEYS),
}


@dataclass(frozen=True)
class Scenario:
    """A parsed scenario file.

    ``initial`` holds the initial state in the order of the system's
    simulator (``y0, v0`` / ``q0, i0`` / ``x1, v1, x2, v2``).  ``stiffness``
    fixes ``k`` for identification instead of fitting it.
    """

    name: str
    system: str
    params: object
    excitation: ChirpParams
    initial: tuple
    snr_db: float = math.inf
    seed: int = 0
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    stiffness: float | None = None
    source: str = field(default="", repr=False)


@dataclass(frozen=True)
class SimulationOutput:
    """Excitation and response series plus system-specific extras.

    The response is the channel identification works on: displacement for
    the mechanical systems, charge for the circuit.  ``extras`` carries
    the circuit current, the second mass displacement and the stick flag.
    """

    excitation: TimeSeries
    response: TimeSeries
    extras: dict = field(default_factory=dict)


def _line_index(text: str) -> tuple[dict, dict]:
    # configparser keeps no positions, so map (section, key) to line numbers here
    keys, sections = {}, {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            sections.setdefault(section, no)
            continue
        for sep in ("=", ":"):
            if sep in line:
                keys.setdefault((section, line.split(sep, 1)[0].strip().lower()), no)
                break
    return keys, sections


class _Reader:
    def __init__(self, text: str, overrides=None):
        self.text = text
        self.cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            self.cp.read_string(text)
        except configparser.MissingSectionHeaderError as exc:
            raise ConfigError("key/value line before any [section] header", line=exc.lineno) from None
        except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
            raise ConfigError(str(exc).split(": ", 1)[-1], line=exc.lineno) from None
        except configparser.ParsingError as exc:
            lineno, line = exc.errors[0]
            raise ConfigError(f"cannot parse {line.strip()!r}", line=lineno) from None
        self.lines, self.section_lines = _line_index(text)
        for dotted, value in (overrides or {}).items():
            section, _, key = dotted.partition(".")
            if not key:
                raise ConfigError(f"override {dotted!r} must look like section.key", key=dotted)
            section, key = section.strip().lower(), key.strip().lower()
            if not self.cp.has_section(section):
                self.cp.add_section(section)
            self.cp.set(section, key, str(value))

    def line(self, section, key=None):
        if key is None:
            return self.section_lines.get(section)
        return self.lines.get((section, key))

    def has(self, section, key):
        return self.cp.has_option(section, key)

    def raw(self, section, key):
        return self.cp.get(section, key)

    def get(self, section, key, kind=float, default=None, required=False):
        if not self.has(section, key):
            if required:
                raise ConfigError(f"missing required key {key!r} in section [{section}]", key=key,
                                  line=self.line(section))
            return default
        value = self.raw(section, key).strip()
        try:
            if kind is bool:
                return self.cp.getboolean(section, key)
            if kind is int:
                return int(value)
            return float(value)
        except ValueError:
            raise ConfigError(f"key {key!r} expects {kind.__name__}, got {value!r}", key=key,
                              line=self.line(section, key)) from None

    def check_keys(self, section, allowed):
        if not self.cp.has_section(section):
            return
        for key in self.cp.options(section):
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in section [{section}]", key=key,
                                  line=self.line(section, key))


def _build(factory, values: dict, reader: _Reader, section: str):
    try:
        return factory(**values)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(f"invalid [{section}] values: {exc}", line=reader.line(section)) from None


def _parse_pipeline(r: _Reader) -> tuple[PipelineConfig, float | None]:
    r.check_keys("pipeline", _SECTIONS["pipeline"])
    hvd_values = {key: r.get("pipeline", key, kind, default=getattr(HvdConfig(), key))
                  for key, kind in _HVD_KEYS.items()}
    hvd = _build(HvdConfig, hvd_values, r, "pipeline")
    pipe_values = {key: r.get("pipeline", key, kind, default=getattr(PipelineConfig(), key))
                   for key, kind in _PIPELINE_KEYS.items() if key != "stiffness"}
    pipeline = _build(PipelineConfig, {"hvd": hvd, **pipe_values}, r, "pipeline")
    stiffness = r.get("pipeline", "stiffness", default=None)
    if stiffness is not None and not stiffness > 0:
        raise ConfigError("stiffness must be positive", key="stiffness", line=r.line("pipeline", "stiffness"))
    return pipeline, stiffness


def parse_pipeline(text: str, overrides=None) -> tuple[PipelineConfig, float | None]:
    """Read only the ``[pipeline]`` section; returns the config and an optional fixed stiffness.

    Other sections are ignored as long as they are known scenario sections,
    so a full scenario file works as an identification config too.
    """
    r = _Reader(text, overrides)
    for section in r.cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]", key=section, line=r.line(section))
    return _parse_pipeline(r)


def parse_scenario(text: str, overrides=None) -> Scenario:
    """Parse scenario text; raises :class:`ConfigError` on any problem.

    ``overrides`` maps ``"section.key"`` to a value string and takes
    precedence over the text.
    """
    r = _Reader(text, overrides)
    for section in r.cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]", key=section, line=r.line(section))
    for section in ("scenario", "params", "excitation"):
        if not r.cp.has_section(section):
            raise ConfigError(f"missing section [{section}]", key=section)
    r.check_keys("scenario", _SECTIONS["scenario"])
    if not r.has("scenario", "system"):
        raise ConfigError("missing required key 'system' in section [scenario]", key="system",
                          line=r.line("scenario"))
    system = r.raw("scenario", "system").strip().lower()
    if system not in SYSTEMS:
        raise ConfigError(f"unknown system type {system!r}; expected one of {', '.join(SYSTEMS)}",
                          key="system", line=r.line("scenario", "system"))
    name = r.raw("scenario", "name").strip() if r.has("scenario", "name") else system

    keymap = _PARAM_KEYS[system]
    r.check_keys("params", set(keymap))
    if system == "stick_slip":
        base = StickSlipParams.default()
        values = {f.name: getattr(base, f.name) for f in fields(StickSlipParams)}
        for key, attr in keymap.items():
            values[attr] = r.get("params", key, default=values[attr])
        params = _build(StickSlipParams, values, r, "params")
    else:
        defaults = _PARAM_DEFAULTS[system]
        values = {}
        for key, attr in keymap.items():
            values[attr] = r.get("params", key, default=defaults.get(key), required=key not in defaults)
        factory = SimpleOscillatorParams if system == "simple" else RlcParams
        params = _build(factory, values, r, "params")

    r.check_keys("excitation", _SECTIONS["excitation"])
    exc_values = {key: r.get("excitation", key, required=True) for key in _EXCITATION_KEYS}
    excitation = _build(ChirpParams, exc_values, r, "excitation")

    init_keys = _INITIAL_KEYS[system]
    r.check_keys("initial", set(init_keys))
    initial = []
    for key in init_keys:
        if system == "simple" and key == "v0" and r.has("initial", "v0") \
                and r.raw("initial", "v0").strip().lower() == "matched":
            try:
                initial.append(matched_velocity(params, excitation))
            except ParameterError as exc:
                raise ConfigError(str(exc), key="v0", line=r.line("initial", "v0")) from None
        else:
            initial.append(r.get("initial", key, default=0.0))

    r.check_keys("noise", _SECTIONS["noise"])
    snr_db = r.get("noise", "snr_db", default=math.inf)
    seed = r.get("noise", "seed", int, default=r.get("scenario", "seed", int, default=0))

    pipeline, stiffness = _parse_pipeline(r)

    return Scenario(name=name, system=system, params=params, excitation=excitation,
                    initial=tuple(float(v) for v in initial), snr_db=float(snr_db), seed=int(seed),
                    pipeline=pipeline, stiffness=stiffness, source=text)


def preset_names() -> list[str]:
    """Names of the scenario files shipped with the package."""
    return sorted(p.name[:-4] for p in resources.files(__package__).joinpath("scenarios").iterdir()
                  if p.name.endswith(".ini"))


def read_scenario_text(name_or_path) -> str:
    """Text of a scenario file, or of a shipped preset when given its bare name."""
    path = Path(name_or_path)
    if not path.exists() and str(name_or_path) in preset_names():
        return resources.files(__package__).joinpath("scenarios", f"{name_or_path}.ini").read_text()
    try:
        return path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc.strerror}") from None


def load_scenario(name_or_path, overrides=None) -> Scenario:
    """Read and parse a scenario file or preset."""
    return parse_scenario(read_scenario_text(name_or_path), overrides)


def matched_velocity(p: SimpleOscillatorParams, c: ChirpParams) -> float:
    """Initial velocity of the linear steady state under ``A sin(w1 t)``.

    Starting there (with zero displacement) avoids a free oscillation at
    the natural frequency that an undamped system would otherwise carry
    through the whole record.
    """
    w1 = 2 * np.pi * c.f1
    den = p.k - p.m * w1 * w1
    if den == 0:
        raise ParameterError("excitation starts at the linear natural frequency")
    return float(c.amplitude * w1 / den)


def simulate_scenario(sc: Scenario, snr_db: float | None = None, seed: int | None = None) -> SimulationOutput:
    """Simulate a scenario; finite ``snr_db`` adds independent noise to excitation and response."""
    x = chirp(sc.excitation)
    extras = {}
    if sc.system == "simple":
        y = simulate_simple(sc.params, x, *sc.initial)
    elif sc.system == "rlc":
        y, current = simulate_rlc(sc.params, x, *sc.initial)
        extras["current"] = current
    else:
        res = simulate_stick_slip(sc.params, x, sc.initial)
        y = res.x1
        extras["x2"] = res.x2
        extras["stick"] = x.with_samples(res.stick.astype(float))
    snr = sc.snr_db if snr_db is None else float(snr_db)
    if np.isfinite(snr):
        base = sc.seed if seed is None else int(seed)
        sx, sy = (int(s.generate_state(1)[0]) for s in np.random.SeedSequence(base).spawn(2))
        x = add_noise(x, snr, sx)
        y = add_noise(y, snr, sy)
    return SimulationOutput(excitation=x, response=y, extras=extras)
