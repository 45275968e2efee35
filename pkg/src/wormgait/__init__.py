"""Model, identification and gait optimization for a compliant worm robot in a corrugated pipe."""

from .actuation import ActuationParams, BodyLengthTrace, propagate_actuation
from .energy import EnergyParams, GaitMetrics, accumulate_energy, cost_of_transport, gait_metrics, instantaneous_power
from .estimators import ActuationModel, EnergyModel, GaitOptimizer, LocomotionModel
from .exceptions import (
    DegenerateLogError, GridError, LivelockError, ParameterError, ResolutionError, WindowError, WormGaitError,
)
from .identification import FitReport, PowerLog, TrackingLog, fit_actuation, fit_energy, fit_locomotion
from .locomotion import FORWARD, MarginSetting, SimTrace, simulate, simulate_measured
from .optimize import OptimizerConfig, PipelineModels, margin_scan, nsga2_optimize, select_representative_points
from .params import TABLE1, FinForceLaw, GaitParams, RobotParams, commanded_gait, fin_force
from .synthetic import synthetic_campaign

__version__ = "0.1.0"

__all__ = [
    "ActuationModel", "ActuationParams", "BodyLengthTrace", "DegenerateLogError", "EnergyModel", "EnergyParams",
    "FORWARD", "FinForceLaw", "FitReport", "GaitMetrics", "GaitOptimizer", "GaitParams", "GridError",
    "LivelockError", "LocomotionModel", "MarginSetting", "OptimizerConfig", "ParameterError", "PipelineModels",
    "PowerLog", "ResolutionError", "RobotParams", "SimTrace", "TABLE1", "TrackingLog", "WindowError",
    "WormGaitError", "accumulate_energy", "commanded_gait", "cost_of_transport", "fin_force", "fit_actuation",
    "fit_energy", "fit_locomotion", "gait_metrics", "instantaneous_power", "margin_scan", "nsga2_optimize",
    "propagate_actuation", "select_representative_points", "simulate", "simulate_measured", "synthetic_campaign",
]
