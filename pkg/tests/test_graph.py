"""Tests for topologies, Laplacians, and weight-schedule validation."""
import numpy as np
import pytest

from cvarqd.graph import (
    GraphTopology,
    WeightSchedule,
    laplacian,
    ring_topology,
    validate_schedule,
)


def circulant_eigenvalues(n):
    """Known spectrum of the n-cycle Laplacian: 2 - 2 cos(2 pi j / n)."""
    return np.sort(2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(n) / n))


class TestGraphTopology:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            GraphTopology(3, frozenset({(0, 0), (0, 1), (1, 2)}))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            GraphTopology(3, frozenset({(0, 1), (1, 3)}))

    def test_rejects_disconnected(self):
        with pytest.raises(ValueError):
            GraphTopology(4, frozenset({(0, 1), (2, 3)}))

    def test_normalizes_edge_order(self):
        g = GraphTopology(3, frozenset({(1, 0), (2, 1)}))
        assert g.edges == frozenset({(0, 1), (1, 2)})
        assert g.neighbors(1) == (0, 2)
        assert g.degree(1) == 2


class TestRingTopology:
    def test_cycle_of_four(self):
        g = ring_topology(4, 2)
        assert g.edges == frozenset({(0, 1), (1, 2), (2, 3), (0, 3)})

    def test_forty_agent_cycle(self):
        g = ring_topology(40, 2)
        assert g.n_agents == 40
        assert len(g.edges) == 40
        assert all(g.degree(i) == 2 for i in range(40))

    def test_k4_gives_complete_graph_on_five(self):
        g = ring_topology(5, 4)
        expected = frozenset((i, j) for i in range(5) for j in range(i + 1, 5))
        assert g.edges == expected

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            ring_topology(2, 2)
        with pytest.raises(ValueError):
            ring_topology(5, 3)  # odd
        with pytest.raises(ValueError):
            ring_topology(5, 6)  # too large


class TestLaplacian:
    def test_single_edge(self):
        g = GraphTopology(2, frozenset({(0, 1)}))
        np.testing.assert_array_equal(laplacian(g), [[1.0, -1.0], [-1.0, 1.0]])

    def test_cycle_of_four_spectrum(self):
        lap = laplacian(ring_topology(4, 2))
        np.testing.assert_array_equal(np.diag(lap), [2.0, 2.0, 2.0, 2.0])
        np.testing.assert_allclose(
            np.linalg.eigvalsh(lap), circulant_eigenvalues(4), atol=1e-12
        )
        np.testing.assert_allclose(np.linalg.eigvalsh(lap), [0.0, 2.0, 2.0, 4.0], atol=1e-12)

    def test_complete_three_spectrum(self):
        g = GraphTopology(3, frozenset({(0, 1), (0, 2), (1, 2)}))
        lap = laplacian(g)
        np.testing.assert_array_equal(np.diag(lap), [2.0, 2.0, 2.0])
        assert lap[0, 1] == lap[1, 2] == -1.0
        np.testing.assert_allclose(np.linalg.eigvalsh(lap), [0.0, 3.0, 3.0], atol=1e-12)

    @pytest.mark.parametrize("g", [
        ring_topology(4, 2),
        ring_topology(8, 2),
        ring_topology(9, 4),
        ring_topology(5, 4),
        GraphTopology(3, frozenset({(0, 1), (1, 2)})),
    ])
    def test_structural_properties(self, g):
        lap = laplacian(g)
        np.testing.assert_allclose(lap, lap.T, atol=0)
        np.testing.assert_allclose(lap.sum(axis=1), 0.0, atol=1e-12)
        eigs = np.linalg.eigvalsh(lap)
        assert eigs[0] >= -1e-10
        # connected graphs have a simple zero eigenvalue
        assert abs(eigs[0]) <= 1e-10
        assert eigs[1] > 1e-10

    def test_ring_laplacian_matches_circulant_formula(self):
        for n in (5, 8, 12):
            lap = laplacian(ring_topology(n, 2))
            np.testing.assert_allclose(
                np.linalg.eigvalsh(lap), circulant_eigenvalues(n), atol=1e-10
            )


class TestWeightSchedule:
    def test_rejects_nonpositive_constants(self):
        with pytest.raises(ValueError):
            WeightSchedule(0.0, 0.1, 0.6, 0.05)
        with pytest.raises(ValueError):
            WeightSchedule(0.2, -0.1, 0.6, 0.05)

    def test_initial_weights(self):
        w = WeightSchedule(0.2, 0.1, 0.2, 0.3)
        assert float(w.alpha(0)) == 0.2
        assert float(w.beta(0)) == 0.1

    def test_alpha_at_step_31(self):
        # 32 ** 0.2 == 2 exactly, so alpha_31 = 0.1
        w = WeightSchedule(0.2, 0.1, 0.2, 0.3)
        assert float(w.alpha(31)) == pytest.approx(0.2 / 32 ** 0.2, abs=0)
        assert float(w.alpha(31)) == pytest.approx(0.1, abs=1e-12)

    def test_sequences_nonincreasing_and_positive(self):
        w = WeightSchedule(0.2, 0.05, 0.6, 0.05)
        ks = np.arange(0, 5000)
        alphas = w.alpha(ks)
        betas = w.beta(ks)
        assert np.all(alphas > 0) and np.all(betas > 0)
        assert np.all(np.diff(alphas) <= 0)
        assert np.all(np.diff(betas) <= 0)

    def test_ratio_nondecreasing_when_tau2_smaller(self):
        w = WeightSchedule(0.2, 0.05, 0.6, 0.05)
        ks = np.arange(0, 2000)
        ratio = w.beta(ks) / w.alpha(ks)
        assert np.all(np.diff(ratio) >= 0)


class TestValidateSchedule:
    def test_printed_large_scale_constants_fail_weight_sum(self):
        # a + N*b = 0.2 + 40*0.1 = 4.2 > 1
        g = ring_topology(40, 2)
        w = WeightSchedule(0.2, 0.1, 0.6, 0.05)
        report = validate_schedule(g, w)
        assert report.weight_sum == pytest.approx(4.2)
        assert not report.weight_sum_ok
        # ... yet the direct spectral check still passes: 1 - 0.1*4 - 0.2 = 0.4
        assert report.psd_ok
        assert report.psd_min_eigenvalue == pytest.approx(0.4, abs=1e-12)

    def test_desk_scale_constants_pass(self):
        g = ring_topology(8, 2)
        w = WeightSchedule(0.2, 0.05, 0.6, 0.05)
        report = validate_schedule(g, w)
        assert report.weight_sum == pytest.approx(0.6)
        assert report.weight_sum_ok
        assert report.tau1_ok and report.tau2_ok
        assert report.psd_ok
        assert report.all_ok

    def test_printed_exponents_fail_both_ranges(self):
        g = ring_topology(8, 2)
        w = WeightSchedule(0.2, 0.05, 0.2, 0.3)
        report = validate_schedule(g, w)
        assert not report.tau1_ok
        assert not report.tau2_ok

    def test_report_lines_carry_pass_fail(self):
        g = ring_topology(8, 2)
        report = validate_schedule(g, WeightSchedule(0.2, 0.05, 0.6, 0.05))
        lines = report.lines()
        assert len(lines) == 4
        assert all(line.startswith("PASS") for line in lines)

    def test_weight_sum_condition_implies_psd_at_all_steps(self):
        # whenever a + N*b <= 1, the stacked step matrix stays PSD for k >= 0
        rng = np.random.default_rng(12)
        for _ in range(20):
            g = ring_topology(int(rng.integers(4, 12)), 2)
            a = rng.uniform(0.01, 0.5)
            b = rng.uniform(0.001, (1.0 - a) / g.n_agents)
            w = WeightSchedule(a, b, 0.8, 0.2)
            assert validate_schedule(g, w).weight_sum_ok
            lap = laplacian(g)
            eye = np.eye(g.n_agents)
            for k in (0, 1, 7, 100, 5000):
                step = eye - float(w.beta(k)) * lap - float(w.alpha(k)) * eye
                assert np.linalg.eigvalsh(step)[0] >= -1e-10
