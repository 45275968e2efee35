"""Generic NSGA-II for box-bounded continuous problems (all objectives minimized)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


def dominates(a, b) -> bool:
    """True if ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def fast_non_dominated_sort(F: np.ndarray) -> list[np.ndarray]:
    """Partition row indices of ``F`` into Pareto fronts (front 0 first)."""
    F = np.asarray(F, dtype=float)
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    n_dominators = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(n_dominators == 0)
    while current.size:
        fronts.append(current)
        n_dominators = n_dominators - dom[current].sum(axis=0)
        n_dominators[current] = -1
        current = np.flatnonzero(n_dominators == 0)
    return fronts


def crowding_distance(F: np.ndarray) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    n, m = F.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        col = F[order, j]
        span = col[-1] - col[0]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span > 0 and np.isfinite(span):
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def rank_and_crowding(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rank = np.empty(len(F), dtype=int)
    crowd = np.empty(len(F))
    for r, idx in enumerate(fast_non_dominated_sort(F)):
        rank[idx] = r
        crowd[idx] = crowding_distance(F[idx])
    return rank, crowd


def hypervolume_2d(F: np.ndarray, ref) -> float:
    """Area dominated by the points of ``F`` and bounded by ``ref`` (2 objectives)."""
    F = np.asarray(F, dtype=float)
    F = F[np.all(F < np.asarray(ref), axis=1)]
    if F.size == 0:
        return 0.0
    F = F[np.lexsort((F[:, 1], F[:, 0]))]
    area = 0.0
    best_y = ref[1]
    for x, y in F:
        if y < best_y:
            area += (ref[0] - x) * (best_y - y)
            best_y = y
    return float(area)


def binary_tournament(rng: np.random.Generator, rank, crowd, n: int) -> np.ndarray:
    a = rng.integers(0, len(rank), size=n)
    b = rng.integers(0, len(rank), size=n)
    a_wins = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] >= crowd[b]))
    return np.where(a_wins, a, b)


def sbx_crossover(rng, p1, p2, lower, upper, eta: float, prob: float):
    """Simulated binary crossover with bound-aware spread (Deb and Agrawal)."""
    c1 = p1.copy()
    c2 = p2.copy()
    if rng.random() > prob:
        return c1, c2
    for i in range(len(p1)):
        if rng.random() > 0.5 or abs(p1[i] - p2[i]) < 1e-14:
            continue
        y1, y2 = min(p1[i], p2[i]), max(p1[i], p2[i])
        lo, hi = lower[i], upper[i]
        u = rng.random()
        children = []
        for beta in (1.0 + 2.0 * (y1 - lo) / (y2 - y1), 1.0 + 2.0 * (hi - y2) / (y2 - y1)):
            alpha = 2.0 - beta ** (-(eta + 1.0))
            if u <= 1.0 / alpha:
                betaq = (u * alpha) ** (1.0 / (eta + 1.0))
            else:
                betaq = (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta + 1.0))
            children.append(betaq)
        ch1 = 0.5 * ((y1 + y2) - children[0] * (y2 - y1))
        ch2 = 0.5 * ((y1 + y2) + children[1] * (y2 - y1))
        ch1 = min(max(ch1, lo), hi)
        ch2 = min(max(ch2, lo), hi)
        if rng.random() <= 0.5:
            ch1, ch2 = ch2, ch1
        c1[i], c2[i] = ch1, ch2
    return c1, c2


def polynomial_mutation(rng, x, lower, upper, eta: float, prob: float):
    y = x.copy()
    for i in range(len(x)):
        if rng.random() > prob:
            continue
        lo, hi = lower[i], upper[i]
        span = hi - lo
        if span <= 0:
            continue
        d1 = (y[i] - lo) / span
        d2 = (hi - y[i]) / span
        u = rng.random()
        power = 1.0 / (eta + 1.0)
        if u < 0.5:
            val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)
            delta = val**power - 1.0
        else:
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)
            delta = 1.0 - val**power
        y[i] = min(max(y[i] + delta * span, lo), hi)
    return y


def _truncate(F_front: np.ndarray, front: np.ndarray, k: int) -> np.ndarray:
    order = np.argsort(-crowding_distance(F_front), kind="stable")
    return front[order[:k]]


def environmental_selection(F_all: np.ndarray, pop_size: int, elite=None, hv_reference=None) -> np.ndarray:
    """Elitist survivor selection by front rank, then crowding distance.

    ``elite`` indexes the previous first front inside ``F_all``. When the merged
    first front must be truncated and crowding alone would shrink its
    hypervolume, every previous elite (or a merged-front point dominating it)
    is kept first and crowding fills the remaining slots. This keeps the
    first-front hypervolume nondecreasing across generations.
    """
    fronts = fast_non_dominated_sort(F_all)
    survivors: list[int] = []
    for front in fronts:
        if len(survivors) + len(front) <= pop_size:
            survivors.extend(front.tolist())
            continue
        chosen = _truncate(F_all[front], front, pop_size - len(survivors))
        if not survivors and elite is not None and hv_reference is not None:
            before = hypervolume_2d(F_all[elite], hv_reference)
            if hypervolume_2d(F_all[chosen], hv_reference) < before:
                chosen = _protect_elite(F_all, front, elite, pop_size)
        survivors.extend(chosen.tolist())
        break
    return np.asarray(survivors)


def _protect_elite(F_all, front, elite, k) -> np.ndarray:
    in_front = set(front.tolist())
    keep: list[int] = []
    for e in elite:
        if e in in_front:
            rep = int(e)
        else:
            rep = next(int(j) for j in front if dominates(F_all[j], F_all[e]))
        if rep not in keep:
            keep.append(rep)
    rest = np.array([j for j in front if j not in set(keep)], dtype=int)
    if len(keep) < k and rest.size:
        keep.extend(_truncate(F_all[rest], rest, k - len(keep)).tolist())
    return np.asarray(keep[:k])


@dataclass
class NSGA2Result:
    X: np.ndarray
    F: np.ndarray
    rank: np.ndarray
    crowding: np.ndarray
    hypervolume: list = field(default_factory=list)
    hv_reference: np.ndarray | None = None
    n_evaluations: int = 0

    @property
    def front_indices(self) -> np.ndarray:
        return np.flatnonzero(self.rank == 0)


def nsga2(
    evaluate: Callable[[np.ndarray], np.ndarray],
    lower,
    upper,
    pop_size: int = 64,
    n_generations: int = 60,
    crossover_prob: float = 0.9,
    crossover_eta: float = 15.0,
    mutation_prob: float | None = None,
    mutation_eta: float = 20.0,
    seed: int = 0,
    hv_reference=None,
    callback: Callable[[int, NSGA2Result], None] | None = None,
) -> NSGA2Result:
    """Minimize the objectives returned by ``evaluate`` (rows of X to rows of F).

    ``evaluate`` receives a whole generation at once so it may parallelize;
    all random draws happen here, in a fixed order, so the result depends only
    on ``seed``.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n_var = lower.size
    if pop_size < 2 or pop_size % 2:
        raise ValueError("pop_size must be an even number >= 2")
    if not (0 <= crossover_prob <= 1):
        raise ValueError("crossover_prob must lie in [0, 1]")
    if mutation_prob is None:
        mutation_prob = 1.0 / n_var
    if not (0 <= mutation_prob <= 1):
        raise ValueError("mutation_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)

    X = lower + rng.random((pop_size, n_var)) * (upper - lower)
    F = np.asarray(evaluate(X), dtype=float)
    n_evals = pop_size
    rank, crowd = rank_and_crowding(F)
    if hv_reference is None:
        finite = np.where(np.isfinite(F), F, np.nan)
        hi = np.nanmax(finite, axis=0)
        lo = np.nanmin(finite, axis=0)
        hv_reference = hi + 0.1 * np.maximum(hi - lo, 1e-12)
    hv_reference = np.asarray(hv_reference, dtype=float)
    result = NSGA2Result(X, F, rank, crowd, [hypervolume_2d(F[rank == 0], hv_reference)] if F.shape[1] == 2 else [],
                         hv_reference, n_evals)
    if callback is not None:
        callback(0, result)

    for gen in range(1, n_generations + 1):
        parents = binary_tournament(rng, rank, crowd, pop_size)
        children = np.empty_like(X)
        for k in range(0, pop_size, 2):
            c1, c2 = sbx_crossover(rng, X[parents[k]], X[parents[k + 1]], lower, upper, crossover_eta, crossover_prob)
            children[k] = polynomial_mutation(rng, c1, lower, upper, mutation_eta, mutation_prob)
            children[k + 1] = polynomial_mutation(rng, c2, lower, upper, mutation_eta, mutation_prob)
        F_children = np.asarray(evaluate(children), dtype=float)
        n_evals += pop_size

        X_all = np.vstack([X, children])
        F_all = np.vstack([F, F_children])
        survivors = environmental_selection(F_all, pop_size, np.flatnonzero(rank == 0),
                                            hv_reference if F.shape[1] == 2 else None)
        X, F = X_all[survivors], F_all[survivors]
        rank, crowd = rank_and_crowding(F)
        result = NSGA2Result(X, F, rank, crowd, result.hypervolume, hv_reference, n_evals)
        if F.shape[1] == 2:
            result.hypervolume.append(hypervolume_2d(F[rank == 0], hv_reference))
        if callback is not None:
            callback(gen, result)
    return result
