"""Tests for discrete CVaR primitives, the level grid, and interpolation."""
import numpy as np
import pytest

from cvarqd.risk import (
    DiscreteDistribution,
    YGrid,
    concavity_defect,
    cvar,
    cvar_bruteforce,
    interpolate_yq,
    max_concavity_defect,
    value_at_risk,
)


def uniform4():
    return DiscreteDistribution([1.0, 2.0, 3.0, 4.0], [0.25] * 4)


def random_distribution(rng, max_atoms=6):
    n = int(rng.integers(2, max_atoms + 1))
    values = rng.uniform(-10, 10, size=n)
    probs = rng.dirichlet(np.ones(n))
    return DiscreteDistribution(values, probs)


def cvar_rockafellar_uryasev(d, y):
    """Independent oracle: min_w w + E[(Z - w)+] / y.

    For a discrete distribution the minimum is attained at a support atom,
    so evaluating at every atom is exact.
    """
    best = np.inf
    for w in d.values:
        best = min(best, w + np.dot(d.probs, np.maximum(d.values - w, 0.0)) / y)
    return float(best)


class TestYGrid:
    def test_uniform_levels(self):
        grid = YGrid.uniform(4)
        np.testing.assert_allclose(grid.levels, [0.25, 0.5, 0.75, 1.0])
        assert grid.m == 4
        np.testing.assert_allclose(grid.knots, [0.0, 0.25, 0.5, 0.75, 1.0])

    def test_rejects_bad_levels(self):
        with pytest.raises(ValueError):
            YGrid(np.array([0.5, 0.5, 1.0]))  # not strictly increasing
        with pytest.raises(ValueError):
            YGrid(np.array([0.0, 0.5, 1.0]))  # zero level
        with pytest.raises(ValueError):
            YGrid(np.array([0.5, 1.5]))  # above 1
        with pytest.raises(ValueError):
            YGrid.uniform(0)

    def test_explicit_levels_accepted(self):
        grid = YGrid(np.array([0.1, 0.4, 0.9]))
        assert grid.m == 3


class TestDiscreteDistribution:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            DiscreteDistribution([1.0, 2.0], [0.5, 0.6])

    def test_rejects_negative_probs(self):
        with pytest.raises(ValueError):
            DiscreteDistribution([1.0, 2.0], [-0.1, 1.1])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            DiscreteDistribution([1.0, 2.0, 3.0], [0.5, 0.5])


class TestValueAtRisk:
    def test_uniform_half(self):
        # CDF of {1,2,3,4}: F(2) = 0.5 >= 0.5
        assert value_at_risk(uniform4(), 0.5) == 2.0

    def test_full_level_is_minimum(self):
        assert value_at_risk(uniform4(), 1.0) == 1.0

    def test_point_mass(self):
        d = DiscreteDistribution([7.0], [1.0])
        for y in (0.1, 0.5, 1.0):
            assert value_at_risk(d, y) == 7.0

    def test_rejects_bad_level(self):
        for y in (0.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                value_at_risk(uniform4(), y)


class TestCvar:
    def test_uniform_half_is_mean_of_worst_half(self):
        # weight 1/0.5 = 2 on values 4 and 3: 0.5*(4 + 3) ... = 3.5
        assert cvar(uniform4(), 0.5) == pytest.approx(3.5, abs=1e-12)

    def test_full_level_is_expectation(self):
        assert cvar(uniform4(), 1.0) == pytest.approx(2.5, abs=1e-12)

    def test_small_level_approaches_max(self):
        assert cvar(uniform4(), 0.25) == pytest.approx(4.0, abs=1e-12)

    def test_two_atom_exact_tail(self):
        d = DiscreteDistribution([0.0, 10.0], [0.3, 0.7])
        assert cvar(d, 0.3) == pytest.approx(10.0, abs=1e-12)

    def test_rejects_bad_level(self):
        with pytest.raises(ValueError):
            cvar(uniform4(), 0.0)

    def test_nonincreasing_in_level(self):
        rng = np.random.default_rng(5)
        grid = YGrid.uniform(20)
        for _ in range(50):
            d = random_distribution(rng)
            vals = [cvar(d, y) for y in grid.levels]
            assert np.all(np.diff(vals) <= 1e-12)

    def test_dominates_expectation(self):
        # xi == 1 is always dual feasible
        rng = np.random.default_rng(6)
        for _ in range(50):
            d = random_distribution(rng)
            for y in (0.1, 0.35, 0.8, 1.0):
                assert cvar(d, y) >= d.mean() - 1e-12

    def test_full_level_matches_expectation_randomized(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            d = random_distribution(rng)
            assert cvar(d, 1.0) == pytest.approx(d.mean(), abs=1e-10)

    def test_heavy_tail_atom_hits_max(self):
        # when the top atom holds at least y1 mass, CVaR at y1 is the max
        d = DiscreteDistribution([0.0, 2.0, 9.0], [0.4, 0.3, 0.3])
        assert cvar(d, 0.05) == pytest.approx(9.0, abs=1e-12)

    def test_matches_rockafellar_uryasev(self):
        rng = np.random.default_rng(8)
        grid = YGrid.uniform(20)
        for _ in range(100):
            d = random_distribution(rng)
            for y in grid.levels:
                assert cvar(d, y) == pytest.approx(
                    cvar_rockafellar_uryasev(d, y), abs=1e-9
                )


class TestCvarBruteforce:
    def test_uniform_half(self):
        assert cvar_bruteforce(uniform4(), 0.5) == pytest.approx(3.5, abs=1e-3)

    def test_full_level_is_expectation(self):
        assert cvar_bruteforce(uniform4(), 1.0) == pytest.approx(2.5, abs=1e-9)

    def test_two_atom_exact_tail(self):
        d = DiscreteDistribution([0.0, 10.0], [0.3, 0.7])
        assert cvar_bruteforce(d, 0.3) == pytest.approx(10.0, abs=1e-9)

    def test_rejects_large_support(self):
        d = DiscreteDistribution(np.arange(7.0), np.full(7, 1 / 7))
        with pytest.raises(ValueError):
            cvar_bruteforce(d, 0.5)

    def test_agrees_with_greedy(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            d = random_distribution(rng)
            for y in (0.05, 0.3, 0.65, 1.0):
                assert cvar_bruteforce(d, y) == pytest.approx(cvar(d, y), abs=1e-3)


class TestInterpolateYq:
    def test_exact_at_knots(self):
        grid = YGrid.uniform(5)
        q = np.array([5.0, 3.0, 2.5, 2.0, 1.0])
        for j, y in enumerate(grid.levels):
            assert interpolate_yq(grid, q, y) == pytest.approx(q[j], abs=1e-14)

    def test_constant_slice_everywhere(self):
        grid = YGrid.uniform(4)
        q = np.full(4, 3.7)
        for y in (0.1, 0.33, 0.5, 0.99, 1.0):
            assert interpolate_yq(grid, q, y) == pytest.approx(3.7, abs=1e-12)

    def test_hand_linear_case(self):
        # g knots (0,0), (0.5,2), (1,3); g(0.75) = 2.5 -> 2.5/0.75 = 10/3
        grid = YGrid(np.array([0.5, 1.0]))
        assert interpolate_yq(grid, np.array([4.0, 3.0]), 0.75) == pytest.approx(
            10.0 / 3.0, rel=1e-14
        )

    def test_below_grid_uses_zero_anchor(self):
        grid = YGrid(np.array([0.5, 1.0]))
        # g linear from (0,0) to (0.5, 2): g(0.25) = 1 -> q = 4
        assert interpolate_yq(grid, np.array([4.0, 3.0]), 0.25) == pytest.approx(4.0)

    def test_rejects_out_of_range(self):
        grid = YGrid(np.array([0.25, 0.5]))
        q = np.array([1.0, 1.0])
        with pytest.raises(ValueError):
            interpolate_yq(grid, q, 0.0)
        with pytest.raises(ValueError):
            interpolate_yq(grid, q, 0.75)

    def test_vector_queries(self):
        grid = YGrid.uniform(4)
        q = np.array([4.0, 3.0, 2.0, 1.0])
        out = interpolate_yq(grid, q, np.array([0.25, 0.5, 1.0]))
        np.testing.assert_allclose(out, [4.0, 3.0, 1.0], atol=1e-14)

    def test_concave_input_gives_concave_interpolant(self):
        # slopes of g between knots must be nonincreasing when defect is 0
        rng = np.random.default_rng(10)
        grid = YGrid.uniform(8)
        for _ in range(20):
            d = random_distribution(rng)
            q = np.array([cvar(d, y) for y in grid.levels])
            assert concavity_defect(grid, q) <= 1e-9
            fine = np.linspace(grid.levels[0], 1.0, 101)
            g = fine * interpolate_yq(grid, q, fine)
            mid = 0.5 * (g[:-2] + g[2:])
            assert np.all(g[1:-1] >= mid - 1e-9)


class TestConcavityDefect:
    def test_constant_slice_is_concave(self):
        grid = YGrid.uniform(5)
        assert concavity_defect(grid, np.full(5, 2.0)) == 0.0

    def test_concave_product(self):
        # q_j = -y_j makes g = -y^2, concave
        grid = YGrid.uniform(5)
        assert concavity_defect(grid, -grid.levels) == 0.0

    def test_convex_product_positive_defect(self):
        # g = +y^2 on {0.25, 0.5, 0.75}: chord (0.0625+0.5625)/2 = 0.3125
        # exceeds g(0.5) = 0.25 by 0.0625
        grid = YGrid(np.array([0.25, 0.5, 0.75]))
        defect = concavity_defect(grid, grid.levels)
        assert defect == pytest.approx(0.0625, abs=1e-12)

    def test_requires_three_levels(self):
        grid = YGrid(np.array([0.5, 1.0]))
        with pytest.raises(ValueError):
            concavity_defect(grid, np.array([1.0, 1.0]))

    def test_table_version_matches_worst_slice(self):
        rng = np.random.default_rng(11)
        grid = YGrid.uniform(6)
        table = rng.uniform(-2, 2, size=(3, 2, 6))
        worst = max(
            concavity_defect(grid, table[s, a])
            for s in range(3)
            for a in range(2)
        )
        assert max_concavity_defect(grid, table) == pytest.approx(worst, abs=1e-15)
