"""Command-line front end.

Exit status: 0 success, 2 usage or input error, 3 model error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import os
import sys
import warnings
import numpy as np

from . import __version__
from . import io as wio
from .actuation import BodyLengthTrace
from .energy import accumulate_energy, instantaneous_power, gait_metrics
from .exceptions import ParameterError, WormGaitError
from .identification import (
    energy_run, fit_actuation, fit_energy, fit_locomotion, idle_power_of,
    reference_level, predict_length_change, predicted_energy,
)
from .locomotion import MarginSetting, initial_state, simulate, simulate_measured
from .optimize import OptimizerConfig, margin_scan, nsga2_optimize, select_representative_points
from .params import GaitParams, commanded_gait, commanded_gait_rate
from .synthetic import synthetic_campaign

logger = logging.getLogger("wormgait")

EXIT_OK, EXIT_USAGE, EXIT_MODEL = 0, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- argument helpers ---------------------------------------------------------------------


def parse_gait(text: str) -> GaitParams:
    try:
        s, f = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--gait expects 'S,f', got {text!r}") from None
    try:
        return GaitParams(s, f)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None


def parse_grid(text: str) -> np.ndarray:
    try:
        lo, step, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"--grid expects MIN:STEP:MAX, got {text!r}") from None
    if lo < 0:
        raise UsageError("--grid margins must be non-negative")
    if hi < lo or step <= 0:
        raise UsageError("--grid must be increasing (MIN <= MAX, STEP > 0)")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return np.round(lo + step * np.arange(n + 1), 12)


def _load_values(paths, snapshot=None) -> dict:
    if snapshot is not None:
        return dict(snapshot)
    values = wio.table1_values()
    for path in paths:
        if path is None or path == "table1":
            continue
        try:
            values.update(wio.load_params(path))
        except OSError as exc:
            raise UsageError(f"cannot read parameter file: {exc}") from None
        except wio.FormatError as exc:
            raise UsageError(str(exc)) from None
    try:
        values.update(wio.env_overrides())
    except wio.FormatError as exc:
        raise UsageError(str(exc)) from None
    return values


def _models(values):
    try:
        return wio.build_models(values)
    except (ParameterError, TypeError) as exc:
        raise UsageError(f"invalid parameters: {exc}") from None


def _outdir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _write_manifest(out, command, args, values, inputs, outputs, seed=None, extra=None):
    manifest = {
        "command": command,
        "arguments": {k: v for k, v in vars(args).items() if k not in ("func", "snapshot")},
        "config": values,
        "inputs": inputs,
        "outputs": outputs,
        "seed": seed,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "version": __version__,
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(out, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(type(obj).__name__)


def _finite_or_str(x):
    return x if math.isfinite(x) else str(x)


# -- commands -----------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    values = _load_values([args.params], args.snapshot)
    models = _models(values)
    gait = parse_gait(args.gait)
    try:
        gait.check_bounds()
        margin = MarginSetting(args.margin)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    if args.cycles < 3:
        raise UsageError("--cycles must be at least 3 (metrics use the last three)")
    out = _outdir(args.out)

    sim, length = simulate(gait, models.robot, models.act, margin, n_cycles=args.cycles, dt=args.dt)
    power = instantaneous_power(sim.cable_force, length.dl_dt, models.energy)
    energy = accumulate_energy(power, length.dt)
    metrics = gait_metrics(sim, power, gait, models.robot, n_cycles=args.cycles, g=models.g)

    files = {
        "trace": os.path.join(out, "trace.csv"),
        "events": os.path.join(out, "events.csv"),
        "body_length": os.path.join(out, "body_length.csv"),
        "power": os.path.join(out, "power.csv"),
        "metrics": os.path.join(out, "metrics.csv"),
    }
    wio.write_sim_trace(files["trace"], sim, length)
    wio.write_events(files["events"], sim)
    wio.write_body_length(files["body_length"], length)
    wio.write_power(files["power"], sim.times, power, energy)
    wio.write_metrics(files["metrics"], gait, margin.delta_m, metrics)
    _write_manifest(out, "simulate", args, values, {"params": args.params}, files,
                    extra={"metrics": {"v_avg": metrics.avg_speed, "P_avg": metrics.avg_power,
                                       "cot": _finite_or_str(metrics.cot),
                                       "cot_per_meter": _finite_or_str(metrics.cot_per_meter),
                                       "switch_events": sim.n_switches}})
    print(f"v_avg={metrics.avg_speed:.6g} m/s P_avg={metrics.avg_power:.6g} W cot={metrics.cot:.6g}")
    return EXIT_OK


def _read_logs(paths, reader, what):
    logs = []
    for path in paths:
        try:
            logs.append(reader(path))
        except OSError as exc:
            raise UsageError(f"cannot read {what} file: {exc}") from None
        except (wio.FormatError, ValueError) as exc:
            raise UsageError(str(exc)) from None
    return logs


def cmd_identify(args) -> int:
    values = _load_values([args.params], args.snapshot)
    models = _models(values)
    if args.mode == "energy" and not args.power:
        raise UsageError("--power is required in energy mode")
    if args.mode == "actuation" and not args.gait:
        raise UsageError("--gait is required in actuation mode")
    tracking = _read_logs(args.tracking, wio.read_tracking, "tracking")
    power = _read_logs(args.power or [], wio.read_power, "power")
    gaits = [parse_gait(g) for g in (args.gait or [])]
    out = _outdir(args.out)
    margin = MarginSetting()
    rows = []

    if args.mode == "locomotion":
        report = fit_locomotion(tracking, models.robot, window=args.window, ridges=args.ridges, n_jobs=args.jobs)
        fitted = report.as_dict()
        robot = models.robot.replace(**fitted)
        for i, log in enumerate(tracking):
            if args.ridges is not None:
                log = log.until_ridges(args.ridges, robot.d)
            trace = BodyLengthTrace.from_measurement(log.times, log.length, window=args.window)
            r = robot.replace(l0=float(log.length[0]))
            sim = simulate_measured(trace, r, margin, initial_state(float(log.x1[0]), r.l0))
            pred = sim.x1 + (reference_level(log.x1) - reference_level(sim.x1))
            rows += [(i, t, m, p, m - p) for t, m, p in zip(log.times, log.x1, pred)]
    elif args.mode == "actuation":
        report = fit_actuation(tracking, gaits, preloaded=args.preloaded, n_ref=args.ref_samples, n_jobs=args.jobs)
        fitted = report.as_dict()
        from .actuation import ActuationParams

        act = ActuationParams(**fitted)
        if len(gaits) == 1:
            gaits = gaits * len(tracking)
        for i, (log, gait) in enumerate(zip(tracking, gaits)):
            t = log.times - log.times[0]
            pred, _ = predict_length_change(act, t, commanded_gait(gait, t), commanded_gait_rate(gait, t),
                                            args.preloaded, args.ref_samples)
            meas = log.length - reference_level(log.length, args.ref_samples)
            rows += [(i, tt, m, p, m - p) for tt, m, p in zip(log.times, meas, pred)]
    else:
        if len(power) != len(tracking):
            raise UsageError("give one --power file per --tracking file")
        report = fit_energy(power, tracking, models.robot, window=args.window, ridges=args.ridges, n_jobs=args.jobs)
        fitted = report.as_dict()
        fitted["p_idle"] = idle_power_of(power)
        for i, (p_log, t_log) in enumerate(zip(power, tracking)):
            if args.ridges is not None:
                t_log = t_log.until_ridges(args.ridges, models.robot.d)
                p_log = p_log.truncate(len(t_log.times))
            run = energy_run(p_log, t_log, models.robot, margin, args.window)
            pred = predicted_energy(run, fitted["c_b"], fitted["alpha_p"])
            rows += [(i, t, m, p, m - p) for t, m, p in zip(run.times, run.e_meas, pred)]

    files = {
        "report": os.path.join(out, "fit_report.txt"),
        "residuals": os.path.join(out, "residuals.csv"),
        "params": os.path.join(out, "params_fitted.conf"),
    }
    wio.write_fit_report(files["report"], report, args.mode)
    wio.write_csv(files["residuals"], wio.RESIDUAL_HEADER, rows)
    merged = dict(values)
    merged.update(fitted)
    with open(files["params"], "w") as fh:
        fh.write(wio.format_params(merged))
    _write_manifest(out, "identify", args, values,
                    {"tracking": args.tracking, "power": args.power, "params": args.params}, files,
                    extra={"fit": {**{k: float(v) for k, v in fitted.items()}, "cost": report.cost,
                                   "converged": report.converged}})
    print(" ".join(f"{k}={v:.6g}" for k, v in fitted.items()) + f" cost={report.cost:.4g} "
          f"converged={str(report.converged).lower()}")
    return EXIT_OK


def _optimizer_config(args, delta_m: float) -> OptimizerConfig:
    try:
        return OptimizerConfig(pop_size=args.pop, n_generations=args.gens, seed=args.seed, delta_m=delta_m,
                               n_cycles=args.cycles, dt=args.dt, n_jobs=args.jobs)
    except (ValueError, ParameterError) as exc:
        raise UsageError(str(exc)) from None


def cmd_optimize(args) -> int:
    values = _load_values([args.params, args.act, args.energy], args.snapshot)
    models = _models(values)
    config = _optimizer_config(args, args.margin)
    out = _outdir(args.out)
    front = nsga2_optimize(config, models)
    files = {"front": os.path.join(out, "front.csv"), "selected": os.path.join(out, "selected.csv")}
    wio.write_csv(files["front"], wio.FRONT_HEADER,
                  ((p.gait.stroke_s, p.gait.freq_f, p.metrics.avg_speed, p.metrics.avg_power, p.metrics.cot, p.rank)
                   for p in front))
    labels = ("min_power", "cruising", "max_speed")
    picks = select_representative_points(front)
    wio.write_csv(files["selected"], wio.SELECTED_HEADER,
                  ((lab, p.gait.stroke_s, p.gait.freq_f, p.metrics.avg_speed, p.metrics.avg_power, p.metrics.cot)
                   for lab, p in zip(labels, picks)))
    if all(p.metrics.avg_speed <= 1e-9 for p in front):
        print("warning: no gait on the front makes headway at this margin", file=sys.stderr)
    _write_manifest(out, "optimize", args, values,
                    {"params": args.params, "act": args.act, "energy": args.energy}, files, seed=args.seed)
    print(f"{len(front)} Pareto points written to {files['front']}")
    return EXIT_OK


def cmd_scan_margin(args) -> int:
    values = _load_values([args.params, args.act, args.energy], args.snapshot)
    models = _models(values)
    grid = parse_grid(args.grid)
    config = _optimizer_config(args, 0.0)
    out = _outdir(args.out)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = margin_scan(grid, config, models, factor=args.factor, cot_key=args.cot)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    files = {"scan": os.path.join(out, "margin_scan.csv")}
    wio.write_csv(files["scan"], wio.SCAN_HEADER,
                  ((dm, c, g.stroke_s if g else math.nan, g.freq_f if g else math.nan)
                   for dm, c, g in zip(result.delta_m, result.optimal_cot, result.argmin_gaits)))
    _write_manifest(out, "scan-margin", args, values,
                    {"params": args.params, "act": args.act, "energy": args.energy}, files, seed=args.seed,
                    extra={"cliff_delta_m": result.cliff})
    print(f"cliff delta_m = {result.cliff}" if result.cliff is not None else "no cliff detected")
    return EXIT_OK


def cmd_synth(args) -> int:
    values = _load_values([args.params], args.snapshot)
    models = _models(values)
    gait = parse_gait(args.gait)
    out = _outdir(args.out)
    tracking, power = synthetic_campaign(
        gait, models.robot, models.act, models.energy, n_cycles=args.cycles, dt=args.dt,
        preloaded=not args.rest_start, position_noise=args.position_noise, power_noise=args.power_noise,
        length_noise=args.length_noise, seed=args.seed,
    )
    files = {"tracking": os.path.join(out, "tracking.csv"), "power": os.path.join(out, "power.csv")}
    wio.write_tracking(files["tracking"], tracking)
    wio.write_power_log(files["power"], power)
    _write_manifest(out, "synth", args, values, {"params": args.params}, files, seed=args.seed)
    return EXIT_OK


def cmd_defaults(args) -> int:
    text = wio.format_params(wio.table1_values())
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read manifest: {exc}") from None
    stored = argparse.Namespace(**manifest["arguments"])
    if args.out:
        stored.out = args.out
    stored.snapshot = manifest["config"]
    handler = COMMANDS.get(manifest["command"])
    if handler is None:
        raise UsageError(f"manifest command {manifest['command']!r} cannot be replayed")
    return handler(stored)


COMMANDS = {
    "simulate": cmd_simulate,
    "identify": cmd_identify,
    "optimize": cmd_optimize,
    "scan-margin": cmd_scan_margin,
    "synth": cmd_synth,
}


def _add_optimizer_args(p):
    p.add_argument("--act", default=None, help="actuation parameter file")
    p.add_argument("--energy", default=None, help="energy parameter file")
    p.add_argument("--pop", type=int, default=64)
    p.add_argument("--gens", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cycles", type=int, default=5)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--jobs", type=int, default=None, help="parallel evaluation threads (default: all CPUs)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wormgait", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate one gait and report its metrics")
    p.add_argument("--params", default="table1", help="parameter file or 'table1'")
    p.add_argument("--gait", required=True, metavar="S,f")
    p.add_argument("--margin", type=float, default=0.0, help="robustness margin (m)")
    p.add_argument("--cycles", type=int, default=5)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", help="fit model parameters to logged experiments")
    p.add_argument("--mode", choices=("locomotion", "actuation", "energy"), required=True)
    p.add_argument("--tracking", action="append", required=True, help="tracking CSV (t,x1,L); repeatable")
    p.add_argument("--power", action="append", help="power CSV (t,P); repeatable, energy mode")
    p.add_argument("--gait", action="append", metavar="S,f", help="commanded gait; actuation mode")
    p.add_argument("--params", default="table1")
    p.add_argument("--ridges", type=int, default=None, help="truncate runs after this many ridges")
    p.add_argument("--window", type=int, default=5, help="smoothing window for measured length")
    p.add_argument("--preloaded", action="store_true", help="runs start at the clipped equilibrium")
    p.add_argument("--ref-samples", type=int, default=10,
                   help="leading samples averaged for the length-change reference (actuation mode)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("optimize", help="robust speed/power Pareto front")
    p.add_argument("--params", default="table1")
    p.add_argument("--margin", type=float, default=0.0034, help="robustness margin (m)")
    _add_optimizer_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("scan-margin", help="price-of-robustness scan over margins")
    p.add_argument("--params", default="table1")
    p.add_argument("--grid", default="0:0.0002:0.008", metavar="MIN:STEP:MAX")
    p.add_argument("--factor", type=float, default=1.5, help="COT jump ratio that marks the cliff")
    p.add_argument("--cot", choices=("cot", "cot_per_meter"), default="cot")
    _add_optimizer_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scan_margin)

    p = sub.add_parser("synth", help="write synthetic tracking and power logs")
    p.add_argument("--params", default="table1")
    p.add_argument("--gait", default="0.07,0.2", metavar="S,f")
    p.add_argument("--cycles", type=int, default=5)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--position-noise", type=float, default=0.0)
    p.add_argument("--length-noise", type=float, default=0.0, help="noise on the tracked body length (m)")
    p.add_argument("--power-noise", type=float, default=0.0)
    p.add_argument("--rest-start", action="store_true", help="start unloaded instead of pretensioned")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("defaults", help="print the default parameter file")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_defaults)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="write to another directory")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.snapshot = None
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WormGaitError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
