"""Synthetic experiment logs generated by the forward model.

Runs start from rest with the cable already pretensioned (the clipped
equilibrium), so the first power samples are pure idle power.
"""

from __future__ import annotations

import numpy as np

from .actuation import ActuationParams
from .energy import EnergyParams, instantaneous_power
from .identification import PowerLog, TrackingLog
from .locomotion import MarginSetting, simulate
from .params import TABLE1, GaitParams, RobotParams


def synthetic_campaign(
    gait: GaitParams,
    robot: RobotParams = TABLE1,
    act: ActuationParams = ActuationParams(),
    energy: EnergyParams = EnergyParams(),
    n_cycles: int = 5,
    dt: float = 1e-3,
    preloaded: bool = True,
    position_noise: float = 0.0,
    power_noise: float = 0.0,
    length_noise: float = 0.0,
    seed: int | None = None,
) -> tuple[TrackingLog, PowerLog]:
    """Tracking and power logs of one run, optionally with Gaussian sensor noise.

    ``position_noise`` perturbs the tracked rear-mass position, ``length_noise``
    the tracked body length and ``power_noise`` the power samples (clipped at 0).
    """
    dl0 = act.preload if preloaded else 0.0
    sim, trace = simulate(gait, robot, act, MarginSetting(), n_cycles=n_cycles, dt=dt, dl0=dl0)
    power = instantaneous_power(sim.cable_force, trace.dl_dt, energy)
    rng = np.random.default_rng(seed)
    x1 = sim.x1 + position_noise * rng.standard_normal(sim.x1.size)
    length = sim.body_length + length_noise * rng.standard_normal(sim.x1.size)
    power = np.maximum(power + power_noise * rng.standard_normal(power.size), 0.0)
    return TrackingLog(sim.times, x1, length), PowerLog(sim.times, power)
