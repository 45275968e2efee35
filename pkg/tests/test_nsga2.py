import numpy as np
import pytest

from wormgait.nsga2 import (
    binary_tournament, crowding_distance, dominates, environmental_selection, fast_non_dominated_sort,
    hypervolume_2d, nsga2, polynomial_mutation, rank_and_crowding, sbx_crossover,
)

LOWER = np.array([0.01, 0.08])
UPPER = np.array([0.09, 0.4])


def brute_force_fronts(F):
    remaining = set(range(len(F)))
    fronts = []
    while remaining:
        front = {i for i in remaining if not any(dominates(F[j], F[i]) for j in remaining if j != i)}
        fronts.append(sorted(front))
        remaining -= front
    return fronts


class TestSorting:
    def test_dominates(self):
        assert dominates([0, 0], [1, 0])
        assert not dominates([0, 0], [0, 0])
        assert not dominates([0, 1], [1, 0])

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        F = rng.integers(0, 6, size=(40, 2)).astype(float)
        fast = [sorted(f.tolist()) for f in fast_non_dominated_sort(F)]
        assert fast == brute_force_fronts(F)

    def test_crowding_boundaries_infinite(self):
        F = np.array([[0.0, 3.0], [1.0, 2.0], [2.0, 1.0], [3.0, 0.0]])
        d = crowding_distance(F)
        assert np.isinf(d[0]) and np.isinf(d[3])
        assert d[1] == pytest.approx(2.0 / 3 + 2.0 / 3)

    def test_crowding_small_sets(self):
        assert np.all(np.isinf(crowding_distance(np.array([[1.0, 2.0], [2.0, 1.0]]))))

    def test_rank_and_crowding_shapes(self):
        F = np.random.default_rng(1).random((30, 2))
        rank, crowd = rank_and_crowding(F)
        assert rank.shape == crowd.shape == (30,)
        assert rank.min() == 0


class TestHypervolume:
    def test_single_point(self):
        assert hypervolume_2d(np.array([[0.0, 0.0]]), [1.0, 2.0]) == pytest.approx(2.0)

    def test_staircase(self):
        F = np.array([[0.0, 2.0], [1.0, 1.0], [2.0, 0.0]])
        assert hypervolume_2d(F, [3.0, 3.0]) == pytest.approx(3 + 2 + 1)

    def test_points_beyond_reference_ignored(self):
        assert hypervolume_2d(np.array([[5.0, 5.0]]), [1.0, 1.0]) == 0.0

    def test_dominated_points_add_nothing(self):
        F = np.array([[0.0, 0.0], [0.5, 0.5]])
        assert hypervolume_2d(F, [1.0, 1.0]) == pytest.approx(1.0)


class TestOperators:
    def test_sbx_respects_bounds(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            p1 = LOWER + rng.random(2) * (UPPER - LOWER)
            p2 = LOWER + rng.random(2) * (UPPER - LOWER)
            for c in sbx_crossover(rng, p1, p2, LOWER, UPPER, 15.0, 0.9):
                assert np.all(c >= LOWER) and np.all(c <= UPPER)

    def test_sbx_skipped_returns_copies(self):
        rng = np.random.default_rng(0)
        p1, p2 = np.array([0.02, 0.1]), np.array([0.05, 0.3])
        c1, c2 = sbx_crossover(rng, p1, p2, LOWER, UPPER, 15.0, 0.0)
        np.testing.assert_array_equal(c1, p1)
        assert c1 is not p1

    def test_mutation_respects_bounds(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            x = LOWER + rng.random(2) * (UPPER - LOWER)
            y = polynomial_mutation(rng, x, LOWER, UPPER, 20.0, 1.0)
            assert np.all(y >= LOWER) and np.all(y <= UPPER)

    def test_tournament_prefers_lower_rank(self):
        rng = np.random.default_rng(0)
        rank = np.array([0, 1])
        picks = binary_tournament(rng, rank, np.zeros(2), 1000)
        assert np.mean(picks == 0) > 0.7


class TestEnvironmentalSelection:
    def test_keeps_whole_fronts_first(self):
        F = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, 3.0]])
        assert sorted(environmental_selection(F, 3).tolist()) == [0, 1, 2]

    def test_hypervolume_guard_protects_elite(self):
        # Children crowd around the middle elite, so crowding alone would drop
        # it in favour of a sparse but less valuable point.
        F = np.array([[0.0, 4.0], [1.0, 1.0], [4.0, 0.0], [0.9, 1.2], [1.2, 0.9], [0.2, 3.5], [3.5, 0.2]])
        ref = [5.0, 5.0]
        elite = np.array([0, 1, 2])
        plain = environmental_selection(F, 3)
        assert hypervolume_2d(F[plain], ref) < hypervolume_2d(F[elite], ref)
        guarded = environmental_selection(F, 3, elite=elite, hv_reference=ref)
        assert sorted(guarded.tolist()) == [0, 1, 2]


class TestNSGA2:
    def test_corner_convergence(self):
        res = nsga2(lambda X: -X, LOWER, UPPER, pop_size=64, n_generations=60, seed=3)
        front = res.X[res.front_indices]
        np.testing.assert_allclose(front, np.tile(UPPER, (len(front), 1)), atol=1e-3)

    def test_conflicting_objectives_all_nondominated(self):
        res = nsga2(lambda X: np.column_stack([X[:, 0], -X[:, 0]]), LOWER, UPPER, pop_size=32, n_generations=20)
        assert np.all(res.rank == 0)
        assert np.ptp(res.X[:, 0]) > 0.5 * (UPPER[0] - LOWER[0])

    def test_hypervolume_nondecreasing(self):
        def zdt_like(X):
            s = (X[:, 0] - LOWER[0]) / (UPPER[0] - LOWER[0])
            g = 1 + 9 * (X[:, 1] - LOWER[1]) / (UPPER[1] - LOWER[1])
            return np.column_stack([s, g * (1 - np.sqrt(s / g))])

        res = nsga2(zdt_like, LOWER, UPPER, pop_size=32, n_generations=40, seed=5, hv_reference=[1.1, 11.0])
        hv = np.array(res.hypervolume)
        assert len(hv) == 41
        assert np.all(np.diff(hv) >= 0)

    def test_deterministic(self):
        f = lambda X: np.column_stack([X[:, 0] ** 2, (X[:, 1] - 0.2) ** 2 + X[:, 0]])  # noqa: E731
        a = nsga2(f, LOWER, UPPER, pop_size=16, n_generations=10, seed=11)
        b = nsga2(f, LOWER, UPPER, pop_size=16, n_generations=10, seed=11)
        np.testing.assert_array_equal(a.X, b.X)
        assert a.hypervolume == b.hypervolume

    def test_all_individuals_within_bounds(self):
        seen = []

        def f(X):
            seen.append(X.copy())
            return np.column_stack([X[:, 0], -X[:, 1]])

        nsga2(f, LOWER, UPPER, pop_size=16, n_generations=10)
        X = np.vstack(seen)
        assert np.all(X >= LOWER) and np.all(X <= UPPER)

    def test_evaluation_count_and_callback(self):
        gens = []
        res = nsga2(lambda X: X, LOWER, UPPER, pop_size=8, n_generations=4, callback=lambda g, r: gens.append(g))
        assert res.n_evaluations == 8 * 5
        assert gens == [0, 1, 2, 3, 4]

    @pytest.mark.parametrize("kwargs", [{"pop_size": 7}, {"crossover_prob": 1.5}, {"mutation_prob": -0.1}])
    def test_rejects_bad_config(self, kwargs):
        with pytest.raises(ValueError):
            nsga2(lambda X: X, LOWER, UPPER, **kwargs)
