"""CSV and key-value file formats."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import fields

import numpy as np

from .actuation import ActuationParams, BodyLengthTrace
from .energy import EnergyParams, GaitMetrics
from .identification import FitReport, PowerLog, TrackingLog
from .locomotion import SimTrace
from .params import RobotParams

TRACE_HEADER = ("t", "delta_l", "dl_dt", "d2l_dt2")
SIM_HEADER = ("t", "x1", "x2", "v1", "v2", "a1", "a2", "L", "F_c")
EVENT_HEADER = ("t", "anchor", "direction")
POWER_HEADER = ("t", "P", "E")
METRICS_HEADER = ("S", "f", "delta_m", "v_avg", "P_avg", "cot")
TRACKING_HEADER = ("t", "x1", "L")
POWER_LOG_HEADER = ("t", "P")
RESIDUAL_HEADER = ("run", "t", "measured", "predicted", "residual")
FRONT_HEADER = ("S", "f", "v_avg", "P_avg", "cot", "rank")
SCAN_HEADER = ("delta_m", "optimal_cot", "S_opt", "f_opt")
SELECTED_HEADER = ("label", "S", "f", "v_avg", "P_avg", "cot")


class FormatError(ValueError):
    """A file does not follow its expected layout."""


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path, header) -> np.ndarray:
    """Numeric columns of a CSV whose first line must equal ``header``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            found = tuple(h.strip() for h in next(reader))
        except StopIteration:
            raise FormatError(f"{path}: empty file, expected header {','.join(header)}") from None
        if found != tuple(header):
            raise FormatError(f"{path}: expected header {','.join(header)}, found {','.join(found)}")
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric value ({exc})") from None
    if data.size == 0:
        return np.empty((0, len(header)))
    if data.ndim != 2 or data.shape[1] != len(header):
        raise FormatError(f"{path}: every row needs {len(header)} columns")
    return data


def write_body_length(path, trace: BodyLengthTrace) -> None:
    write_csv(path, TRACE_HEADER, zip(trace.times, trace.delta_l, trace.dl_dt, trace.d2l_dt2))


def read_body_length(path) -> BodyLengthTrace:
    d = read_csv(path, TRACE_HEADER)
    return BodyLengthTrace(d[:, 0], d[:, 1], d[:, 2], d[:, 3])


def write_sim_trace(path, sim: SimTrace, length: BodyLengthTrace) -> None:
    v2 = sim.v1 + np.asarray(length.dl_dt)
    write_csv(path, SIM_HEADER, zip(sim.times, sim.x1, sim.x2, sim.v1, v2, sim.a1, sim.a2,
                                    sim.body_length, sim.cable_force))


def write_events(path, sim: SimTrace) -> None:
    write_csv(path, EVENT_HEADER, ((e.t, e.anchor, e.direction) for e in sim.switch_events))


def write_power(path, times, power, energy) -> None:
    write_csv(path, POWER_HEADER, zip(times, power, energy))


def write_metrics(path, gait, delta_m: float, metrics: GaitMetrics) -> None:
    write_csv(path, METRICS_HEADER, [(gait.stroke_s, gait.freq_f, delta_m, metrics.avg_speed,
                                      metrics.avg_power, metrics.cot)])


def read_tracking(path) -> TrackingLog:
    d = read_csv(path, TRACKING_HEADER)
    return TrackingLog(d[:, 0], d[:, 1], d[:, 2])


def write_tracking(path, log: TrackingLog) -> None:
    write_csv(path, TRACKING_HEADER, zip(log.times, log.x1, log.length))


def read_power(path) -> PowerLog:
    d = read_csv(path, POWER_LOG_HEADER)
    return PowerLog(d[:, 0], d[:, 1])


def write_power_log(path, log: PowerLog) -> None:
    write_csv(path, POWER_LOG_HEADER, zip(log.times, log.power))


def write_fit_report(path, report: FitReport, mode: str) -> None:
    lines = [f"mode = {mode}"]
    lines += [f"{name} = {fmt(v)}" for name, v in zip(report.names, report.values)]
    lines += [
        f"cost = {fmt(report.cost)}",
        f"rms = {fmt(report.rms)}",
        f"iterations = {report.n_iter}",
        f"evaluations = {report.n_evaluations}",
        f"converged = {str(report.converged).lower()}",
    ]
    lines += [f"# {m}" for m in report.messages]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# -- key-value parameter files -------------------------------------------------------------

ROBOT_KEYS = tuple(f.name for f in fields(RobotParams))
ACT_KEYS = tuple(f.name for f in fields(ActuationParams))
ENERGY_KEYS = tuple(f.name for f in fields(EnergyParams))
EXTRA_KEYS = ("g",)
ALL_KEYS = ROBOT_KEYS + ACT_KEYS + ENERGY_KEYS + EXTRA_KEYS
ENV_PREFIX = "WORMGAIT_"


def parse_params(text: str, source: str = "<string>") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{source}:{lineno}: expected 'name = value'")
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in ALL_KEYS:
            raise FormatError(f"{source}:{lineno}: unknown parameter {key!r}")
        try:
            values[key] = float(value)
        except ValueError:
            raise FormatError(f"{source}:{lineno}: {key} is not a number: {value!r}") from None
    return values


def load_params(path) -> dict:
    with open(path) as fh:
        return parse_params(fh.read(), str(path))


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    values = {}
    for key in ALL_KEYS:
        raw = environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            try:
                values[key] = float(raw)
            except ValueError:
                raise FormatError(f"{ENV_PREFIX}{key.upper()} is not a number: {raw!r}") from None
    return values


def table1_values() -> dict:
    from .energy import GRAVITY

    values = {k: getattr(RobotParams(), k) for k in ROBOT_KEYS}
    values.update({k: getattr(ActuationParams(), k) for k in ACT_KEYS})
    values.update({k: getattr(EnergyParams(), k) for k in ENERGY_KEYS})
    values["g"] = GRAVITY
    return values


def format_params(values: dict) -> str:
    out = []
    for group, keys in (("robot", ROBOT_KEYS), ("actuation", ACT_KEYS), ("energy", ENERGY_KEYS),
                        ("metrics", EXTRA_KEYS)):
        present = [k for k in keys if k in values]
        if present:
            out.append(f"# {group}")
            out += [f"{k} = {fmt(values[k])}" for k in present]
    return "\n".join(out) + "\n"


def build_models(values: dict):
    from .optimize import PipelineModels

    robot = RobotParams(**{k: values[k] for k in ROBOT_KEYS if k in values})
    act = ActuationParams(**{k: values[k] for k in ACT_KEYS if k in values})
    energy = EnergyParams(**{k: values[k] for k in ENERGY_KEYS if k in values})
    kwargs = {"g": values["g"]} if "g" in values else {}
    return PipelineModels(robot, act, energy, **kwargs)
