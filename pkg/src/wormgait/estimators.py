"""Estimator-style wrappers around the identification and optimization routines.

Each identifier follows the familiar ``fit(X, y)`` / ``predict(X)`` contract:
constructor arguments are stored verbatim, fitted quantities carry a trailing
underscore, and ``X`` holds one time-ordered experiment per ``groups`` label.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_columns
from .actuation import ActuationParams, BodyLengthTrace
from .energy import EnergyParams, accumulate_energy
from .identification import (
    REFERENCE_SAMPLES, FitReport, PowerLog, TrackingLog, actuation_cost, energy_run, fit_energy, fit_locomotion,
    reference_level, multistart_nelder_mead, predict_length_change,
)
from .locomotion import MarginSetting, initial_state, simulate_measured
from .optimize import OptimizerConfig, PipelineModels, nsga2_optimize, select_representative_points
from .params import TABLE1, GaitParams, RobotParams, commanded_gait, commanded_gait_rate


def _split(groups, n: int) -> list[np.ndarray]:
    if groups is None:
        return [np.arange(n)]
    groups = np.asarray(groups)
    if groups.shape != (n,):
        raise ValueError(f"groups must have one label per row ({n}), got shape {groups.shape}")
    _, first = np.unique(groups, return_index=True)
    return [np.flatnonzero(groups == groups[i]) for i in np.sort(first)]


def _target(y, n: int, name: str) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if y.size != n:
        raise ValueError(f"{name} has {y.size} samples, X has {n} rows")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains non-finite values")
    return y


class ActuationModel(RegressorMixin, BaseEstimator):
    """Slack-clipped first-order actuation fitted to measured length change.

    ``X`` columns: time since actuation onset and the commanded input ``u``.
    ``y``: measured body length (any constant offset is removed by referencing
    each run to the mean of its first ``n_ref`` samples).
    """

    def __init__(self, bounds=None, preloaded: bool = False, n_ref: int = REFERENCE_SAMPLES, max_iter: int = 2000,
                 n_jobs: int = 1):
        self.bounds = bounds
        self.preloaded = preloaded
        self.n_ref = n_ref
        self.max_iter = max_iter
        self.n_jobs = n_jobs

    def fit(self, X, y, groups=None):
        X = as_columns(X, 2, ("t", "u_cmd"))
        y = _target(y, len(X), "y")
        runs = []
        for idx in _split(groups, len(X)):
            t, u = X[idx, 0], X[idx, 1]
            runs.append((t, u, np.gradient(u, t), y[idx] - reference_level(y[idx], self.n_ref)))
        dt = float(runs[0][0][1] - runs[0][0][0])
        bounds = self.bounds
        if bounds is None:
            s_max = max(float(-np.min(u)) for _, u, _, _ in runs)
            bounds = [(1e-4, max(0.05, s_max)), (0.2, 1.5), (max(10.0 * dt, 0.005), 1.5)]
        report = multistart_nelder_mead(
            lambda p: actuation_cost(p, runs, self.preloaded, self.n_ref), bounds, ("delta_s", "gain_k", "tau"),
            max_iter=self.max_iter, n_jobs=self.n_jobs,
        )
        self.params_ = ActuationParams(**report.as_dict())
        self.report_ = report
        return self

    def predict(self, X, du_cmd=None):
        check_is_fitted(self, "params_")
        X = as_columns(X, 2, ("t", "u_cmd"))
        pred, _ = predict_length_change(self.params_, X[:, 0], X[:, 1], du_cmd, self.preloaded, self.n_ref)
        return pred

    def predict_gait(self, gait: GaitParams, times):
        """Length change for a commanded gait, using its exact input rate."""
        times = np.asarray(times, dtype=float)
        return self.predict(np.column_stack([times, commanded_gait(gait, times)]),
                            commanded_gait_rate(gait, times))


class LocomotionModel(RegressorMixin, BaseEstimator):
    """Hybrid anchoring model with ``(eta, p_sw)`` fitted to the rear-mass path.

    ``X`` columns: time and measured body length; ``y``: rear-mass position.
    """

    def __init__(self, robot: RobotParams = TABLE1, bounds=None, delta_m: float = 0.0, window: int = 5,
                 ridges: int | None = None, max_iter: int = 2000, n_jobs: int = 1):
        self.robot = robot
        self.bounds = bounds
        self.delta_m = delta_m
        self.window = window
        self.ridges = ridges
        self.max_iter = max_iter
        self.n_jobs = n_jobs

    def fit(self, X, y, groups=None):
        X = as_columns(X, 2, ("t", "L"))
        y = _target(y, len(X), "y")
        logs = [TrackingLog(X[i, 0], y[i], X[i, 1]) for i in _split(groups, len(X))]
        report = fit_locomotion(logs, self.robot, self.bounds, MarginSetting(self.delta_m), self.window,
                                self.ridges, n_jobs=self.n_jobs, max_iter=self.max_iter)
        self.params_ = self.robot.replace(**report.as_dict())
        self.report_ = report
        return self

    def predict(self, X, x1_start: float = 0.0):
        """Rear-mass position driven by the body length in ``X``."""
        check_is_fitted(self, "params_")
        X = as_columns(X, 2, ("t", "L"))
        trace = BodyLengthTrace.from_measurement(X[:, 0], X[:, 1], window=self.window)
        robot = self.params_.replace(l0=float(X[0, 1]))
        sim = simulate_measured(trace, robot, MarginSetting(self.delta_m), initial_state(x1_start, robot.l0))
        return sim.x1


class EnergyModel(RegressorMixin, BaseEstimator):
    """Electrical power model with ``(c_b, alpha_p)`` fitted to accumulated energy.

    ``X`` columns: time, rear-mass position and body length; ``y``: measured
    power. The idle power is the mean of the first ten samples of each run.
    """

    def __init__(self, robot: RobotParams = TABLE1, bounds=None, window: int = 5, ridges: int | None = None,
                 fixed=None, max_iter: int = 2000):
        self.robot = robot
        self.bounds = bounds
        self.window = window
        self.ridges = ridges
        self.fixed = fixed
        self.max_iter = max_iter

    def fit(self, X, y, groups=None):
        X = as_columns(X, 3, ("t", "x1", "L"))
        y = _target(y, len(X), "y")
        parts = _split(groups, len(X))
        tracking = [TrackingLog(X[i, 0], X[i, 1], X[i, 2]) for i in parts]
        power = [PowerLog(X[i, 0], y[i]) for i in parts]
        report = fit_energy(power, tracking, self.robot, self.bounds, window=self.window, ridges=self.ridges,
                            fixed=self.fixed, max_iter=self.max_iter)
        values = report.as_dict()
        self.p_idle_ = float(np.mean([float(np.mean(p.power[:10])) for p in power]))
        self.c_b_ = values["c_b"]
        self.energy_params_ = EnergyParams(self.p_idle_, values["alpha_p"])
        self.report_: FitReport = report
        return self

    def _run(self, X):
        check_is_fitted(self, "energy_params_")
        X = as_columns(X, 3, ("t", "x1", "L"))
        tracking = TrackingLog(X[:, 0], X[:, 1], X[:, 2])
        idle = PowerLog(X[:, 0], np.full(len(X), self.p_idle_))
        return energy_run(idle, tracking, self.robot, window=self.window)

    def predict(self, X):
        """Instantaneous electrical power."""
        run = self._run(X)
        force = run.force_base - self.c_b_ * run.rate
        return self.p_idle_ + self.energy_params_.alpha_p * np.maximum(-force * run.rate, 0.0)

    def predict_energy(self, X):
        """Cumulative electrical energy from the first sample."""
        X = as_columns(X, 3, ("t", "x1", "L"))
        return accumulate_energy(self.predict(X), float(X[1, 0] - X[0, 0]))


class GaitOptimizer(BaseEstimator):
    """NSGA-II search for speed/power trade-off gaits at a fixed robustness margin.

    ``fit`` takes no data; the pipeline models are the constructor's ``models``.
    """

    def __init__(self, models: PipelineModels = PipelineModels(), delta_m: float = 0.0, pop_size: int = 64,
                 n_generations: int = 60, seed: int = 0, n_cycles: int = 5, dt: float = 1e-3,
                 n_jobs: int | None = None):
        self.models = models
        self.delta_m = delta_m
        self.pop_size = pop_size
        self.n_generations = n_generations
        self.seed = seed
        self.n_cycles = n_cycles
        self.dt = dt
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        config = OptimizerConfig(pop_size=self.pop_size, n_generations=self.n_generations, seed=self.seed,
                                 delta_m=self.delta_m, n_cycles=self.n_cycles, dt=self.dt, n_jobs=self.n_jobs)
        self.front_, self.result_ = nsga2_optimize(config, self.models, return_result=True)
        self.selected_ = dict(zip(("min_power", "cruising", "max_speed"),
                                  select_representative_points(self.front_)))
        return self

    def predict(self, X=None):
        """Front gaits as an ``(n, 2)`` array of ``(S, f)``."""
        check_is_fitted(self, "front_")
        return np.array([[p.gait.stroke_s, p.gait.freq_f] for p in self.front_])
