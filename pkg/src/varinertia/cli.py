"""Command-line front end: ``varinertia simulate | identify | backbone | noise-study``.

Every command writes into ``--out`` and leaves a ``manifest.json`` there
with the arguments and resolved settings needed to run it again.

Exit codes: 0 success, 2 configuration or parameter error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io, plots
from .errors import (
    ConfigError,
    InvalidInputError,
    NoDataError,
    ParameterError,
    VarInertiaError,
)
from .identification import stitch_backbone
from .oracles import BackboneSample, LpBackbone, lp_backbone_eval, sweep_free_backbone
from .pipeline import identify, noise_study
from .scenario import load_scenario, parse_pipeline, read_scenario_text, simulate_scenario
from .simulators import RlcParams, SimpleOscillatorParams

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
DEFAULT_SNRS = (20.0, 26.0, 34.0)
ORACLE_POINTS = 25


def _version() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("varinertia")
    except PackageNotFoundError:
        return "unknown"


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects section.key=value, got {item!r}", key=item)
        out[key.strip()] = value.strip()
    return out


def _manifest(out: Path, command: str, argv, outputs, **extra) -> None:
    payload = {"command": command, "argv": list(argv), "version": _version(),
               "outputs": sorted(str(Path(p).relative_to(out)) for p in outputs)}
    payload.update(extra)
    io.write_manifest(out, payload)


def _settings(cfg) -> dict:
    return json.loads(json.dumps(asdict(cfg), default=str))


def _resolve_k(value):
    """``--k`` takes a number or a path to a ``k_report.json`` file."""
    if value is None:
        return None
    try:
        k = float(value)
    except ValueError:
        try:
            k = float(json.loads(Path(value).read_text())["k"])
        except (OSError, KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"--k expects a number or a k report file, cannot use {value!r} ({exc})",
                              key="k") from None
    if not k > 0:
        raise ConfigError("--k must be positive", key="k")
    return k


def cmd_simulate(args) -> int:
    out = Path(args.out)
    sc = load_scenario(args.config, _overrides(args.set))
    seed = sc.seed if args.seed is None else args.seed
    snr = sc.snr_db if args.snr is None else args.snr
    sim = simulate_scenario(sc, snr_db=snr, seed=seed)
    written = [io.write_timeseries(out / "excitation.csv", sim.excitation),
               io.write_timeseries(out / "response.csv", sim.response)]
    for name, series in sim.extras.items():
        written.append(io.write_timeseries(out / f"{name}.csv", series))
    scenario_copy = out / "scenario.ini"
    scenario_copy.write_text(sc.source)
    written.append(scenario_copy)
    _manifest(out, "simulate", args.argv, written, scenario=sc.name, system=sc.system, seed=seed,
              snr_db=snr, overrides=_overrides(args.set),
              rerun=["varinertia", "simulate", "--config", "scenario.ini", "--seed", str(seed),
                     "--snr", repr(float(snr))] + sum((["--set", s] for s in args.set or ()), []),
              params=asdict(sc.params), excitation=asdict(sc.excitation), initial=list(sc.initial),
              samples=len(sim.excitation))
    print(f"wrote {len(sim.excitation)} samples of {sc.name} to {out}")
    return EXIT_OK


def cmd_identify(args) -> int:
    out = Path(args.out)
    if args.config:
        cfg, k_fixed = parse_pipeline(read_scenario_text(args.config), _overrides(args.set))
    else:
        cfg, k_fixed = parse_pipeline("", _overrides(args.set))
    k_arg = _resolve_k(args.k)
    k = k_arg if k_arg is not None else k_fixed
    x = io.read_timeseries(args.excitation)
    y = io.read_timeseries(args.response)
    res = identify(x, y, cfg, k)
    report = {"k": res.k, "fitted": res.fit is not None}
    if res.fit is not None:
        fit = res.fit
        report.update(objective=fit.objective, k_initial=fit.k_initial, window_count=fit.window_count,
                      windows_considered=fit.windows_considered, window_length=fit.window_length)
        print(f"k = {res.k:.10g}  objective = {fit.objective:.6g}  "
              f"windows = {fit.window_count}/{fit.windows_considered}")
    else:
        print(f"k = {res.k:.10g}  (fixed)")
    written = [io.write_modal(out / "modal.csv", res.trajectory)]
    report_path = out / "k_report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    written.append(report_path)
    valid = int(np.count_nonzero(res.trajectory.valid))
    _manifest(out, "identify", args.argv, written, pipeline=_settings(cfg), k=res.k,
              inputs={"excitation": str(args.excitation), "response": str(args.response)},
              input_sha256={"excitation": _sha256(args.excitation), "response": _sha256(args.response)},
              valid_samples=valid)
    return EXIT_OK


def _oracle_overlays(source, curve) -> tuple[dict, list]:
    """Overlay series and oracle samples from a CSV file or a scenario."""
    path = Path(source)
    if path.suffix.lower() == ".csv":
        samples = io.read_oracle(path)
        return {"oracle": ([s.amplitude for s in samples], [s.omega_n for s in samples])}, samples
    sc = load_scenario(source)
    lo, hi = float(np.min(curve.amplitude)), float(np.max(curve.amplitude))
    if isinstance(sc.params, SimpleOscillatorParams):
        eps = sc.params.epsilon
        if eps > 0:
            # the series is only evaluated where it is meaningful
            hi = min(hi, 0.99 / math.sqrt(eps))
        amps = np.linspace(lo, hi, 200)
        overlays = {}
        for order in (0, 1, 2):
            b = LpBackbone.for_params(sc.params, order)
            overlays[f"series order {order}"] = (amps, lp_backbone_eval(b, amps))
        w2 = overlays["series order 2"][1]
        return overlays, [BackboneSample(float(a), float(w)) for a, w in zip(amps, w2)]
    if isinstance(sc.params, RlcParams):
        free = sc.params if sc.params.R == 0 else RlcParams(**{**asdict(sc.params), "R": 0.0})
        samples = sweep_free_backbone(free, np.geomspace(lo, hi, ORACLE_POINTS))
        return {"free oscillation": ([s.amplitude for s in samples], [s.omega_n for s in samples])}, samples
    raise ParameterError(f"no reference backbone for system {sc.system!r}")


def cmd_backbone(args) -> int:
    out = Path(args.out)
    runs = {Path(p).parent.name or Path(p).stem: io.read_modal(p) for p in args.modal}
    if len(runs) < len(args.modal):
        runs = {f"run {i}": io.read_modal(p) for i, p in enumerate(args.modal)}
    curve = stitch_backbone(list(runs.values()), bins=args.bins)
    written = [io.write_backbone(out / "backbone.csv", curve)]
    overlays = {}
    if args.oracle:
        overlays, samples = _oracle_overlays(args.oracle, curve)
        written.append(io.write_oracle(out / "oracle.csv", samples))
    written += plots.plot_backbone(curve, out / "backbone_frequency.svg", out / "backbone_damping.svg",
                                   overlays=overlays, amplitude_label=args.amplitude_label, runs=runs)
    _manifest(out, "backbone", args.argv, written, inputs=[str(p) for p in args.modal],
              input_sha256=[_sha256(p) for p in args.modal], bins=args.bins, oracle=args.oracle)
    print(f"stitched {len(runs)} run(s) into {curve.amplitude.size} bins")
    return EXIT_OK


def cmd_noise_study(args) -> int:
    out = Path(args.out)
    sc = load_scenario(args.config, _overrides(args.set))
    seed = sc.seed if args.seed is None else args.seed
    snrs = args.snr or list(DEFAULT_SNRS)
    clean = simulate_scenario(sc, snr_db=math.inf)
    k = _resolve_k(args.k)
    envs = noise_study(clean.excitation, clean.response, snrs, args.trials, seed=seed,
                       config=sc.pipeline, k=k if k is not None else sc.stiffness,
                       bins=args.bins, workers=args.workers)
    written = [io.write_noise_envelopes(out / "noise_envelope.csv", envs),
               plots.plot_noise_envelopes(envs, out / "noise_envelope.svg")]
    scenario_copy = out / "scenario.ini"
    scenario_copy.write_text(sc.source)
    written.append(scenario_copy)
    summary = {}
    for env in envs:
        dev = env.max_deviation()
        summary[f"{env.snr_db:g}"] = {"max_deviation": dev, "contains_clean": env.contains_clean()}
        print(f"SNR {env.snr_db:g} dB: max deviation {100 * dev:.2f} %, "
              f"envelope contains clean curve: {env.contains_clean()}")
    _manifest(out, "noise-study", args.argv, written, scenario=sc.name, seed=seed,
              snr_db=[float(s) for s in snrs], trials=args.trials, bins=args.bins,
              overrides=_overrides(args.set), summary=summary)
    return EXIT_OK


def _snr(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if math.isnan(value) or value == -math.inf:
        raise argparse.ArgumentTypeError("SNR must be finite or inf")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varinertia", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=_version())
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required):
        p.add_argument("--config", required=config_required,
                       help="scenario file, or the name of a shipped preset (e.g. table2, rlc_v1)")
        p.add_argument("--out", default=".", help="output directory (default: current directory)")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override one scenario setting; repeatable")

    p = sub.add_parser("simulate", help="simulate a scenario and write excitation/response CSVs")
    common(p, True)
    p.add_argument("--seed", type=int, help="noise seed (default: from the scenario)")
    p.add_argument("--snr", type=_snr, help="noise level in dB, inf for none (default: from the scenario)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", help="identify modal parameters from a pair of CSVs")
    p.add_argument("excitation")
    p.add_argument("response")
    common(p, False)
    p.add_argument("--k", help="fixed stiffness: a number or a k_report.json from an earlier run")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("backbone", help="stitch modal CSVs into a backbone with plots")
    p.add_argument("modal", nargs="+", help="one or more modal.csv files")
    p.add_argument("--out", default=".")
    p.add_argument("--oracle", help="reference backbone: amplitude,omega_n CSV or a scenario to compute one")
    p.add_argument("--bins", type=int, default=200)
    p.add_argument("--amplitude-label", default="amplitude")
    p.set_defaults(func=cmd_backbone)

    p = sub.add_parser("noise-study", help="repeat identification under noise at several SNRs")
    common(p, True)
    p.add_argument("--snr", type=_snr, action="append", help="SNR in dB; repeatable (default: 20, 26, 34)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, help="base seed (default: from the scenario)")
    p.add_argument("--bins", type=int, default=60)
    p.add_argument("--k", help="fixed stiffness: a number or a k_report.json")
    p.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    p.set_defaults(func=cmd_noise_study)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidInputError, NoDataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (VarInertiaError, FloatingPointError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
