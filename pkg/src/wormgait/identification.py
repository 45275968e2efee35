"""Least-squares identification of the locomotion, actuation and energy parameters
from tracking and power logs."""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ._validation import check_finite, check_same_grid, check_uniform_grid
from .actuation import ActuationParams, BodyLengthTrace, response_from_input
from .energy import EnergyParams, accumulate_energy, estimate_idle_power
from .exceptions import DegenerateLogError, GridError, LivelockError, ParameterError, WindowError
from .locomotion import FORWARD, MarginSetting, initial_state, simulate_measured
from .params import RobotParams, commanded_gait, commanded_gait_rate, fin_force

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrackingLog:
    """Camera tracking output: rear-mass position and body length on a uniform grid."""

    times: np.ndarray
    x1: np.ndarray
    length: np.ndarray

    def __post_init__(self):
        t = check_finite("times", self.times)
        if t.size < 100:
            raise GridError(f"tracking log needs at least 100 samples, got {t.size}")
        check_uniform_grid(t)
        for name in ("x1", "length"):
            arr = check_finite(name, getattr(self, name))
            if arr.shape != t.shape:
                raise GridError(f"{name} has {arr.size} samples, times has {t.size}")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "times", t)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def truncate(self, n: int) -> TrackingLog:
        return TrackingLog(self.times[:n], self.x1[:n], self.length[:n])

    def until_ridges(self, n_ridges: int, pitch: float) -> TrackingLog:
        """Cut the log once the rear mass has advanced ``n_ridges`` pitches."""
        progress = FORWARD * (self.x1 - self.x1[0])
        hit = np.flatnonzero(progress >= n_ridges * pitch)
        if hit.size == 0:
            raise WindowError(f"log never advances {n_ridges} ridges ({n_ridges * pitch:.4g} m)")
        return self.truncate(int(hit[0]) + 1)


@dataclass(frozen=True, eq=False)
class PowerLog:
    times: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        t = check_finite("times", self.times)
        p = check_finite("power", self.power)
        if p.shape != t.shape:
            raise GridError("power and times differ in size")
        if p.size < 10:
            raise WindowError(f"power log needs at least 10 samples, got {p.size}")
        if np.any(p < 0):
            raise ValueError("measured power must be non-negative")
        check_uniform_grid(t)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "power", p)

    def truncate(self, n: int) -> PowerLog:
        return PowerLog(self.times[:n], self.power[:n])


@dataclass
class FitReport:
    names: tuple
    values: np.ndarray
    cost: float
    rms: float
    n_iter: int
    converged: bool
    n_evaluations: int = 0
    at_bound: tuple = ()
    history: list = field(default_factory=list, repr=False)
    messages: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return dict(zip(self.names, map(float, self.values)))


def multistart_nelder_mead(objective, bounds, names, n_grid: int = 3, max_iter: int = 2000,
                           xatol: float = 1e-6, n_jobs: int = 1) -> FitReport:
    """Minimize ``objective`` over a box with Nelder-Mead from a grid of starts.

    Parameters are scaled to the unit box and clamped there; the simplex is
    declared converged when its diameter falls below ``xatol`` in scaled units.
    """
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    if np.any(hi <= lo):
        raise ValueError("each bound must satisfy lower < upper")
    span = hi - lo
    counter = itertools.count()

    def scaled(z):
        next(counter)
        return objective(lo + np.clip(z, 0.0, 1.0) * span)

    levels = (np.arange(n_grid) + 0.5) / n_grid
    starts = [np.array(p) for p in itertools.product(levels, repeat=len(bounds))]

    def run(z0):
        history = []

        def record(intermediate_result):
            history.append(float(intermediate_result.fun))

        res = minimize(
            scaled, z0, method="Nelder-Mead", bounds=[(0.0, 1.0)] * len(bounds), callback=record,
            options={"maxiter": max_iter, "xatol": xatol, "fatol": np.inf, "initial_simplex": _simplex(z0)},
        )
        return res, history

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            runs = list(pool.map(run, starts))
    else:
        runs = [run(z) for z in starts]
    best, history = min(runs, key=lambda r: (r[0].fun, r[0].nit))
    z = np.clip(best.x, 0.0, 1.0)
    values = lo + z * span
    cost = float(objective(values))
    at_bound = tuple(n for n, zi in zip(names, z) if zi <= 1e-6 or zi >= 1 - 1e-6)
    messages = [f"parameter {n} at its bound" for n in at_bound]
    converged = bool(best.success) and best.nit < max_iter
    if not converged:
        messages.append(f"Nelder-Mead stopped after {best.nit} iterations: {best.message}")
    return FitReport(tuple(names), values, cost, math.sqrt(max(cost, 0.0)), int(best.nit), converged,
                     next(counter), at_bound, history, messages)


def _simplex(z0):
    n = len(z0)
    step = 0.15
    pts = [z0.copy()]
    for i in range(n):
        p = z0.copy()
        p[i] = p[i] + step if p[i] + step <= 1.0 else p[i] - step
        pts.append(p)
    return np.array(pts)


def _as_runs(obj):
    return list(obj) if isinstance(obj, (list, tuple)) else [obj]


# Measured and predicted series are compared relative to the mean of their
# first few samples, so that noise on one sample cannot offset a whole record.
REFERENCE_SAMPLES = 10


def reference_level(values, n_ref: int = REFERENCE_SAMPLES) -> float:
    """Mean of the first ``n_ref`` samples."""
    if n_ref < 1:
        raise ValueError("n_ref must be at least 1")
    return float(np.mean(np.asarray(values, dtype=float)[:n_ref]))


# -- locomotion ---------------------------------------------------------------------------


def locomotion_cost(eta: float, p_sw: float, runs, known: RobotParams, margin: MarginSetting,
                    window: int = 5, offsets=(0.0, 0.0), n_ref: int = REFERENCE_SAMPLES) -> float:
    """Mean over runs of the mean squared rear-mass position error.

    Both paths are taken relative to their own reference level; the model is
    invariant to translation along the pipe, so only relative motion carries
    information. Candidates that are invalid or drive the switching logic into
    livelock score ``inf``.
    """
    try:
        robot = known.replace(eta=float(eta), p_sw=float(p_sw))
    except ParameterError:
        return math.inf
    total = 0.0
    for log, trace in runs:
        init = initial_state(float(log.x1[0]), robot.l0 + float(trace.delta_l[0]), *offsets)
        try:
            sim = simulate_measured(trace, robot, margin, init)
        except LivelockError:
            return math.inf
        residual = (log.x1 - reference_level(log.x1, n_ref)) - (sim.x1 - reference_level(sim.x1, n_ref))
        total += float(np.mean(residual**2))
    return total / len(runs)


def fit_locomotion(
    logs,
    known: RobotParams,
    bounds=None,
    margin: MarginSetting | None = None,
    window: int = 5,
    ridges: int | None = None,
    offsets=(0.0, 0.0),
    n_ref: int = REFERENCE_SAMPLES,
    n_jobs: int = 1,
    max_iter: int = 2000,
) -> FitReport:
    """Identify ``(eta, p_sw)`` from one or more tracking logs.

    The body length of each log drives the hybrid model (``l0`` is taken as the
    first length sample) and the predicted rear-mass path is matched to the
    measured one, both relative to their first ``n_ref`` samples.
    """
    margin = margin or MarginSetting()
    logs = _as_runs(logs)
    if ridges is not None:
        logs = [log.until_ridges(ridges, known.d) for log in logs]
    runs = []
    for log in logs:
        if np.ptp(log.length) < 1e-9:
            raise DegenerateLogError("body length never changes; locomotion parameters are unidentifiable")
        runs.append((log, BodyLengthTrace.from_measurement(log.times, log.length, window=window)))
    known = known.replace(l0=float(logs[0].length[0]))
    if bounds is None:
        bounds = [(1.0, 1000.0), (known.delta_c / 2.0 * 1.001, 2.0 * known.d)]
    report = multistart_nelder_mead(
        lambda p: locomotion_cost(p[0], p[1], runs, known, margin, window, offsets, n_ref),
        bounds, ("eta", "p_sw"), max_iter=max_iter, n_jobs=n_jobs,
    )
    logger.info("locomotion fit %s cost=%.3g", report.as_dict(), report.cost)
    return report


# -- actuation ----------------------------------------------------------------------------


def predict_length_change(act: ActuationParams, times, u_cmd, du_cmd=None, preloaded: bool = False,
                          n_ref: int = REFERENCE_SAMPLES):
    """Length change for a sampled commanded input, relative to its first ``n_ref`` samples."""
    times = np.asarray(times, dtype=float)
    u_cmd = np.asarray(u_cmd, dtype=float)
    if du_cmd is None:
        du_cmd = np.gradient(u_cmd, times)
    passing = (u_cmd < -act.delta_s) | ((u_cmd == -act.delta_s) & (du_cmd < 0))
    u_eff = np.where(passing, u_cmd, -act.delta_s)
    du_eff = np.where(passing, du_cmd, 0.0)
    dl0 = act.preload if preloaded else 0.0
    trace = response_from_input(act, times, u_eff, du_eff, dl0)
    return trace.delta_l - reference_level(trace.delta_l, n_ref), trace


def actuation_cost(theta, runs, preloaded: bool, n_ref: int = REFERENCE_SAMPLES) -> float:
    try:
        act = ActuationParams(*map(float, theta))
    except ParameterError:
        return math.inf
    total = 0.0
    for times, u_cmd, du_cmd, dl_meas in runs:
        pred, _ = predict_length_change(act, times, u_cmd, du_cmd, preloaded, n_ref)
        total += float(np.mean((dl_meas - pred) ** 2))
    return total / len(runs)


def fit_actuation(
    logs,
    gaits,
    bounds=None,
    preloaded: bool = False,
    n_ref: int = REFERENCE_SAMPLES,
    n_jobs: int = 1,
    max_iter: int = 2000,
) -> FitReport:
    """Identify ``(delta_s, gain_k, tau)`` from measured body length under known gaits.

    The commanded input is rebuilt from each gait with time measured from
    actuation onset (the first log sample). ``preloaded`` starts the model at
    the clipped equilibrium instead of at zero length change. Measured and
    predicted length changes are both taken relative to the mean of their
    first ``n_ref`` samples, so a single noisy first sample cannot shift the
    whole record; ``n_ref=1`` uses the first sample alone.
    """
    logs = _as_runs(logs)
    gaits = _as_runs(gaits)
    if len(gaits) == 1 and len(logs) > 1:
        gaits = gaits * len(logs)
    if len(gaits) != len(logs):
        raise ValueError("need one gait per tracking log")
    runs = []
    for log, gait in zip(logs, gaits):
        dl_meas = log.length - reference_level(log.length, n_ref)
        if np.ptp(dl_meas) < 1e-9:
            raise DegenerateLogError("body length never changes; actuation parameters are unidentifiable")
        t = log.times - log.times[0]
        runs.append((t, commanded_gait(gait, t), commanded_gait_rate(gait, t), dl_meas))
    dt = logs[0].dt
    if bounds is None:
        s_max = max(g.stroke_s for g in gaits)
        bounds = [(1e-4, max(0.05, s_max)), (0.2, 1.5), (max(10.0 * dt, 0.005), 1.5)]
    if bounds[2][0] < 10.0 * dt:
        raise ValueError(f"tau lower bound must be at least 10*dt = {10 * dt:.4g} s")
    report = multistart_nelder_mead(
        lambda p: actuation_cost(p, runs, preloaded, n_ref), bounds, ("delta_s", "gain_k", "tau"),
        max_iter=max_iter, n_jobs=n_jobs,
    )
    delta_s = report.values[0]
    if all(np.min(u) >= -delta_s for _, u, _, _ in runs):
        report.converged = False
        report.messages.append("commanded stroke never exceeds the fitted slack; delta_s is unidentifiable")
    logger.info("actuation fit %s cost=%.3g", report.as_dict(), report.cost)
    return report


# -- energy -------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _EnergyRun:
    times: np.ndarray
    e_meas: np.ndarray
    p_idle: float
    force_base: np.ndarray  # cable force without the bellows damping term
    rate: np.ndarray


def energy_run(power_log: PowerLog, tracking_log: TrackingLog, known: RobotParams,
               margin: MarginSetting | None = None, window: int = 5, offsets=(0.0, 0.0)) -> _EnergyRun:
    check_same_grid(power_log.times, tracking_log.times)
    dt = tracking_log.dt
    trace = BodyLengthTrace.from_measurement(tracking_log.times, tracking_log.length, window=window)
    robot = known.replace(l0=float(tracking_log.length[0]))
    init = initial_state(float(tracking_log.x1[0]), robot.l0, *offsets)
    sim = simulate_measured(trace, robot, margin or MarginSetting(), init)
    L = robot.l0 + np.asarray(trace.delta_l)
    base = (
        robot.m1 * sim.x1_acc
        + robot.k_b * (robot.l_free - L)
        + robot.eta * sim.v1
        + fin_force(robot.fin_law, sim.x1 - sim.a1)
    )
    return _EnergyRun(
        tracking_log.times, accumulate_energy(power_log.power, dt), estimate_idle_power(power_log.power),
        base, np.asarray(trace.dl_dt),
    )


def predicted_energy(run: _EnergyRun, c_b: float, alpha_p: float) -> np.ndarray:
    force = run.force_base - c_b * run.rate
    power = run.p_idle + alpha_p * np.maximum(-force * run.rate, 0.0)
    return accumulate_energy(power, float(run.times[1] - run.times[0]))


def energy_cost(theta, runs) -> float:
    c_b, alpha_p = map(float, theta)
    total = 0.0
    for run in runs:
        total += float(np.mean((run.e_meas - predicted_energy(run, c_b, alpha_p)) ** 2))
    return total / len(runs)


def fit_energy(
    power_logs,
    tracking_logs,
    known: RobotParams,
    bounds=None,
    margin: MarginSetting | None = None,
    window: int = 5,
    ridges: int | None = None,
    fixed: dict | None = None,
    max_iter: int = 2000,
    n_jobs: int = 1,
) -> FitReport:
    """Identify ``(c_b, alpha_p)`` from accumulated energy over one or more runs.

    The idle power of each run is the mean of its first ten samples. Entries of
    ``fixed`` (``{"c_b": ...}`` or ``{"alpha_p": ...}``) hold a parameter at a
    given value and fit the other one alone.
    """
    power_logs = _as_runs(power_logs)
    tracking_logs = _as_runs(tracking_logs)
    if len(power_logs) != len(tracking_logs):
        raise ValueError("need one power log per tracking log")
    pairs = []
    for p_log, t_log in zip(power_logs, tracking_logs):
        check_same_grid(p_log.times, t_log.times)
        if ridges is not None:
            t_log = t_log.until_ridges(ridges, known.d)
            p_log = p_log.truncate(len(t_log.times))
        pairs.append((p_log, t_log))
    runs = [energy_run(p, t, known, margin, window) for p, t in pairs]
    names = ("c_b", "alpha_p")
    if bounds is None:
        bounds = [(1.0, 3000.0), (1.0, 10.0)]
    fixed = dict(fixed or {})
    unknown = [i for i, n in enumerate(names) if n not in fixed]
    if not unknown:
        raise ValueError("nothing left to fit")

    def full(p):
        theta = [fixed.get(n, 0.0) for n in names]
        for i, v in zip(unknown, p):
            theta[i] = v
        return theta

    report = multistart_nelder_mead(
        lambda p: energy_cost(full(p), runs), [bounds[i] for i in unknown],
        tuple(names[i] for i in unknown), max_iter=max_iter, n_jobs=n_jobs,
    )
    if fixed:
        theta = np.array(full(report.values), dtype=float)
        report = FitReport(names, theta, report.cost, report.rms, report.n_iter, report.converged,
                           report.n_evaluations, report.at_bound, report.history, report.messages)
    report.messages.append("p_idle per run: " + ", ".join(f"{r.p_idle:.6g}" for r in runs))
    logger.info("energy fit %s cost=%.3g", report.as_dict(), report.cost)
    return report


def idle_power_of(power_logs) -> float:
    return float(np.mean([estimate_idle_power(p.power) for p in _as_runs(power_logs)]))


def energy_params_from(report: FitReport, power_logs) -> EnergyParams:
    return EnergyParams(p_idle=idle_power_of(power_logs), alpha_p=float(report.as_dict()["alpha_p"]))
