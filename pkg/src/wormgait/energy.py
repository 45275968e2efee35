"""Power, energy and gait metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from ._validation import check_uniform_grid
from .exceptions import ParameterError, WindowError
from .locomotion import FORWARD, SimTrace
from .params import GaitParams, RobotParams

GRAVITY = 9.81
SPEED_FLOOR = 1e-9


@dataclass(frozen=True)
class EnergyParams:
    p_idle: float = 0.82
    alpha_p: float = 3.22

    def __post_init__(self):
        if not (math.isfinite(self.p_idle) and self.p_idle >= 0):
            raise ParameterError(f"p_idle must be >= 0, got {self.p_idle!r}")
        if not (math.isfinite(self.alpha_p) and self.alpha_p >= 1.0):
            raise ParameterError(f"alpha_p must be >= 1, got {self.alpha_p!r}")


@dataclass(frozen=True)
class GaitMetrics:
    """Averages over the evaluation window.

    ``cot`` is weight-normalized and dimensionless; ``cot_per_meter`` is
    ``P/v`` in J/m. Both are ``inf`` when the robot makes no headway.
    """

    avg_speed: float
    avg_power: float
    cot: float
    cot_per_meter: float
    eval_window: tuple[float, float]


def instantaneous_power(cable_force, body_rate, params: EnergyParams):
    mech = np.maximum(-np.asarray(cable_force, dtype=float) * np.asarray(body_rate, dtype=float), 0.0)
    out = params.p_idle + params.alpha_p * mech
    return float(out) if np.ndim(out) == 0 else out


def accumulate_energy(power, dt: float) -> np.ndarray:
    """Cumulative trapezoidal energy with ``E[0] = 0``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    p = np.asarray(power, dtype=float)
    if p.size == 0:
        return p.copy()
    return cumulative_trapezoid(p, dx=dt, initial=0.0)


def cost_of_transport(avg_power: float, avg_speed: float, robot: RobotParams, g: float = GRAVITY) -> tuple[float, float]:
    if avg_speed <= SPEED_FLOOR:
        return math.inf, math.inf
    return avg_power / (robot.total_mass * g * avg_speed), avg_power / avg_speed


def gait_metrics(
    trace: SimTrace,
    power,
    gait: GaitParams,
    robot: RobotParams,
    n_cycles: int = 5,
    n_eval: int = 3,
    g: float = GRAVITY,
) -> GaitMetrics:
    """Average speed and power over the last ``n_eval`` of ``n_cycles`` periods."""
    dt = check_uniform_grid(trace.times)
    period = gait.period
    t_end = n_cycles * period
    t_start = (n_cycles - n_eval) * period
    i_end = int(round((t_end - trace.times[0]) / dt))
    i_start = int(round((t_start - trace.times[0]) / dt))
    if i_end > len(trace.times) - 1:
        raise WindowError(f"trace ends at {trace.times[-1]:.6g} s, need {n_cycles} cycles ({t_end:.6g} s)")
    if i_start < 0:
        raise WindowError("evaluation window starts before the trace")
    duration = trace.times[i_end] - trace.times[i_start]
    speed = FORWARD * (trace.x1[i_end] - trace.x1[i_start]) / duration
    p = np.asarray(power, dtype=float)
    energy = trapezoid(p[i_start : i_end + 1], dx=dt)
    avg_power = float(energy / duration)
    cot, cot_m = cost_of_transport(avg_power, float(speed), robot, g)
    return GaitMetrics(float(speed), avg_power, cot, cot_m, (float(trace.times[i_start]), float(trace.times[i_end])))


def estimate_idle_power(power) -> float:
    p = np.asarray(power, dtype=float)
    if p.size < 10:
        raise WindowError(f"idle power needs at least 10 samples, got {p.size}")
    return float(np.mean(p[:10]))
