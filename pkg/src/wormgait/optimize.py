"""Robust speed/power gait optimization and the price-of-robustness margin scan."""

from __future__ import annotations

import logging
import math
import os
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .actuation import ActuationParams
from .energy import GRAVITY, EnergyParams, GaitMetrics, gait_metrics, instantaneous_power
from .locomotion import MarginSetting, simulate
from .nsga2 import NSGA2Result, dominates, nsga2
from .params import F_BOUNDS, S_BOUNDS, TABLE1, GaitParams, RobotParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineModels:
    robot: RobotParams = TABLE1
    act: ActuationParams = ActuationParams()
    energy: EnergyParams = EnergyParams()
    g: float = GRAVITY


@dataclass(frozen=True)
class OptimizerConfig:
    pop_size: int = 64
    n_generations: int = 60
    crossover_prob: float = 0.9
    crossover_eta: float = 15.0
    mutation_prob: float = 0.5
    mutation_eta: float = 20.0
    seed: int = 0
    s_bounds: tuple = S_BOUNDS
    f_bounds: tuple = F_BOUNDS
    delta_m: float = 0.0
    n_cycles: int = 5
    dt: float = 1e-3
    n_jobs: int | None = None

    def __post_init__(self):
        if self.pop_size < 2 or self.pop_size % 2:
            raise ValueError("population size must be even")
        for name in ("crossover_prob", "mutation_prob"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not (0 < self.s_bounds[0] < self.s_bounds[1] and 0 < self.f_bounds[0] < self.f_bounds[1]):
            raise ValueError("gait bounds must be positive and increasing")
        if self.n_cycles < 3:
            raise ValueError("n_cycles must be at least 3")
        MarginSetting(self.delta_m)


@dataclass(frozen=True)
class ParetoPoint:
    gait: GaitParams
    metrics: GaitMetrics
    rank: int = 0
    crowding: float = math.inf

    @property
    def objectives(self) -> tuple[float, float]:
        return (-self.metrics.avg_speed, self.metrics.avg_power)


@dataclass
class MarginScanResult:
    delta_m: np.ndarray
    optimal_cot: np.ndarray
    argmin_gaits: list
    cliff: float | None
    fronts: list = field(default_factory=list, repr=False)


def evaluate_gait(
    gait: GaitParams,
    models: PipelineModels = PipelineModels(),
    margin: MarginSetting | float = 0.0,
    n_cycles: int = 5,
    dt: float = 1e-3,
) -> GaitMetrics:
    """Clip, actuate, simulate with robust switching, then average speed and power
    over the last three of ``n_cycles`` periods."""
    if not isinstance(margin, MarginSetting):
        margin = MarginSetting(float(margin))
    sim, length = simulate(gait, models.robot, models.act, margin, n_cycles=n_cycles, dt=dt)
    power = instantaneous_power(sim.cable_force, length.dl_dt, models.energy)
    return gait_metrics(sim, power, gait, models.robot, n_cycles=n_cycles, g=models.g)


class GaitEvaluator:
    """Cached, optionally threaded batch evaluation of gaits at one margin."""

    def __init__(self, models: PipelineModels, delta_m: float, n_cycles: int = 5, dt: float = 1e-3,
                 n_jobs: int | None = None):
        self.models = models
        self.margin = MarginSetting(delta_m)
        self.n_cycles = n_cycles
        self.dt = dt
        self.n_jobs = n_jobs if n_jobs else (os.cpu_count() or 1)
        self.cache: dict[tuple, GaitMetrics] = {}
        self._lock = threading.Lock()

    def key(self, s: float, f: float) -> tuple:
        return (round(s, 6), round(f, 6), round(self.margin.delta_m, 6))

    def metrics(self, s: float, f: float) -> GaitMetrics:
        k = self.key(s, f)
        with self._lock:
            hit = self.cache.get(k)
        if hit is not None:
            return hit
        m = evaluate_gait(GaitParams(float(s), float(f)), self.models, self.margin, self.n_cycles, self.dt)
        with self._lock:
            self.cache.setdefault(k, m)
        return m

    def batch(self, X: np.ndarray) -> list[GaitMetrics]:
        rows = [(float(s), float(f)) for s, f in X]
        if self.n_jobs > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                return list(pool.map(lambda r: self.metrics(*r), rows))
        return [self.metrics(*r) for r in rows]

    def objectives(self, X: np.ndarray) -> np.ndarray:
        return np.array([[-m.avg_speed, m.avg_power] for m in self.batch(X)])


def _front_points(result: NSGA2Result, evaluator: GaitEvaluator) -> list[ParetoPoint]:
    seen = set()
    points = []
    for i in result.front_indices:
        s, f = map(float, result.X[i])
        if (s, f) in seen:
            continue
        seen.add((s, f))
        points.append(ParetoPoint(GaitParams(s, f), evaluator.metrics(s, f), int(result.rank[i]),
                                  float(result.crowding[i])))
    points.sort(key=lambda p: (p.metrics.avg_speed, p.metrics.avg_power, p.gait.stroke_s, p.gait.freq_f))
    return points


def nsga2_optimize(
    config: OptimizerConfig = OptimizerConfig(),
    models: PipelineModels = PipelineModels(),
    return_result: bool = False,
):
    """Pareto front of ``[-avg_speed, avg_power]`` over the gait box.

    With ``return_result=True`` the raw :class:`NSGA2Result` (hypervolume
    history, final population) is returned as a second value.
    """
    evaluator = GaitEvaluator(models, config.delta_m, config.n_cycles, config.dt, config.n_jobs)
    lower = np.array([config.s_bounds[0], config.f_bounds[0]])
    upper = np.array([config.s_bounds[1], config.f_bounds[1]])
    # Fixed reference: no headway, and the idle power plus a generous mechanical budget.
    hv_ref = np.array([0.0, models.energy.p_idle + 100.0])
    result = nsga2(
        evaluator.objectives, lower, upper,
        pop_size=config.pop_size,
        n_generations=config.n_generations,
        crossover_prob=config.crossover_prob,
        crossover_eta=config.crossover_eta,
        mutation_prob=config.mutation_prob,
        mutation_eta=config.mutation_eta,
        seed=config.seed,
        hv_reference=hv_ref,
    )
    points = _front_points(result, evaluator)
    logger.info("delta_m=%g: %d front points from %d evaluations (%d simulated)",
                config.delta_m, len(points), result.n_evaluations, len(evaluator.cache))
    return (points, result) if return_result else points


def is_mutually_nondominated(points) -> bool:
    objs = [p.objectives if isinstance(p, ParetoPoint) else tuple(p) for p in points]
    for i, a in enumerate(objs):
        for j, b in enumerate(objs):
            if i != j and dominates(a, b):
                return False
    return True


def optimal_cot(front: list[ParetoPoint]) -> tuple[float, GaitParams | None]:
    best, gait = math.inf, None
    for p in front:
        if math.isfinite(p.metrics.cot) and p.metrics.cot < best:
            best, gait = p.metrics.cot, p.gait
    return best, gait


def detect_cliff(delta_m, cot, factor: float = 1.5) -> float | None:
    """Largest margin before the first jump of the optimal COT by more than ``factor``.

    A jump from a finite value to ``inf`` counts as a jump.
    """
    for i in range(len(cot) - 1):
        a, b = cot[i], cot[i + 1]
        if not math.isfinite(a):
            continue
        if not math.isfinite(b) or (a > 0 and b / a > factor):
            return float(delta_m[i])
    return None


def margin_scan(
    grid,
    config: OptimizerConfig = OptimizerConfig(),
    models: PipelineModels = PipelineModels(),
    factor: float = 1.5,
    cot_key: str = "cot",
) -> MarginScanResult:
    """Optimal cost of transport versus imposed robustness margin."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("margin grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("margin grid must be strictly increasing")
    if grid[0] < 0:
        raise ValueError("margins must be non-negative")
    cots, gaits, fronts = [], [], []
    for dm in grid:
        front = nsga2_optimize(replace(config, delta_m=float(dm)), models)
        if cot_key == "cot":
            best, gait = optimal_cot(front)
        else:
            finite = [p for p in front if math.isfinite(getattr(p.metrics, cot_key))]
            best_p = min(finite, key=lambda p: getattr(p.metrics, cot_key), default=None)
            best, gait = (getattr(best_p.metrics, cot_key), best_p.gait) if best_p else (math.inf, None)
        logger.info("margin %.4g m: optimal %s %.6g", dm, cot_key, best)
        cots.append(best)
        gaits.append(gait)
        fronts.append(front)
    cots = np.asarray(cots)
    cliff = detect_cliff(grid, cots, factor)
    if cliff is None:
        warnings.warn("no price-of-robustness cliff detected on this margin grid", RuntimeWarning, stacklevel=2)
    return MarginScanResult(grid, cots, gaits, cliff, fronts)


def select_representative_points(front: list[ParetoPoint]) -> tuple[ParetoPoint, ParetoPoint, ParetoPoint]:
    """Minimum-power, cruising (minimum COT) and maximum-speed points.

    Points without headway are ignored whenever at least one moving point exists.
    """
    if not front:
        raise ValueError("cannot select points from an empty front")
    moving = [p for p in front if math.isfinite(p.metrics.cot)]
    pool = moving or list(front)
    min_power = min(pool, key=lambda p: (p.metrics.avg_power, -p.metrics.avg_speed))
    max_speed = max(pool, key=lambda p: (p.metrics.avg_speed, -p.metrics.avg_power))
    median_speed = float(np.median([p.metrics.avg_speed for p in pool]))
    cruising = min(pool, key=lambda p: (p.metrics.cot, abs(p.metrics.avg_speed - median_speed)))
    return min_power, cruising, max_speed
