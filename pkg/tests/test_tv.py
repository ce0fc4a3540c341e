"""Tests for the total-variation subgradient solver."""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from lago.core.align import NodeData, ridge_align, ridge_objective
from lago.core.graph import LanguageGraph, complete_graph, empty_graph, path_graph
from lago.errors import DataError, SolverError
from lago.solvers.oracle import random_scalar_instance, scalar_tv_oracle
from lago.solvers.tv import TvConfig, step_size, tv_objective, tv_solve, windowed_means


def random_data(rng, N, b, m, n):
    return [NodeData(node=i, E_V=rng.normal(size=(b, m)), E_A=rng.normal(size=(b, n))) for i in range(N)]


class TestTvConfig:
    """Test solver configuration."""

    @pytest.mark.parametrize("kwargs", [{"alpha": 0.0}, {"eta": -1.0}, {"lam": -0.1}, {"max_iters": 0}])
    def test_invalid(self, kwargs):
        """Test invalid parameters raise DataError."""
        with pytest.raises(DataError):
            TvConfig(**kwargs)

    def test_dict(self):
        """Test dictionary serialization."""
        cfg = TvConfig(eta=0.5, warm_start=True)
        assert TvConfig.from_dict(cfg.to_dict()) == cfg


class TestTvObjective:
    """Test the once-per-edge TV objective."""

    def test_equal_maps_have_no_tv(self):
        """Test identical maps contribute no TV term."""
        data = random_data(np.random.default_rng(0), 3, 4, 2, 2)
        W = [np.ones((2, 2))] * 3
        smooth = sum(ridge_objective(d, W_i, 0.01) for d, W_i in zip(data, W))
        assert tv_objective(complete_graph("abc"), data, W, 0.01, 5.0) == pytest.approx(smooth)

    def test_zero_eta(self):
        """Test eta 0 sums the per-node ridge objectives."""
        data = random_data(np.random.default_rng(1), 2, 4, 2, 2)
        W = [np.zeros((2, 2)), np.ones((2, 2))]
        expected = ridge_objective(data[0], W[0], 0.01) + ridge_objective(data[1], W[1], 0.01)
        assert tv_objective(path_graph("ab"), data, W, 0.01, 0.0) == pytest.approx(expected)

    def test_l1_of_difference(self):
        """Test W_1 - W_2 = [[0.1, -0.2]] with eta 1 adds 0.3."""
        data = [NodeData(node=i, E_V=np.zeros((1, 1)), E_A=np.zeros((1, 2))) for i in range(2)]
        W = [np.array([[0.1, -0.2]]), np.zeros((1, 2))]
        assert tv_objective(path_graph("ab"), data, W, 0.0, 1.0) == pytest.approx(0.3)


class TestTvSolve:
    """Test the solver."""

    def test_step_schedule(self):
        """Test the step at round t is alpha / sqrt(t + 1)."""
        data = random_data(np.random.default_rng(2), 2, 4, 2, 2)
        result = tv_solve(path_graph("ab"), data, TvConfig(max_iters=20, record_trace=True))
        for t, _, step in result.trace.rows:
            assert step == 0.01 / math.sqrt(t + 1)

    def test_decoupled_is_gradient_descent(self):
        """Test eta 0 on one node is bit-equal to plain gradient descent."""
        rng = np.random.default_rng(3)
        E_V, E_A = rng.normal(size=(6, 4)), rng.normal(size=(6, 3))
        lam, alpha = 0.01, 0.01
        W = np.zeros((4, 3))
        for t in range(300):
            W = W - alpha / math.sqrt(t + 1) * (-E_V.T @ (E_A - E_V @ W) + lam * W)
        result = tv_solve(
            empty_graph(["a"]),
            [NodeData(node=0, E_V=E_V, E_A=E_A)],
            TvConfig(lam=lam, eta=0.0, alpha=alpha, max_iters=300),
        )
        assert np.array_equal(result.W[0], W)

    def test_zero_data_stays_zero(self):
        """Test all-zero data keeps every iterate at zero."""
        data = [NodeData(node=i, E_V=np.zeros((3, 2)), E_A=np.zeros((3, 2))) for i in range(3)]
        result = tv_solve(complete_graph("abc"), data, TvConfig(max_iters=50, eta=1.0))
        assert all(not W.any() for W in result.W)

    def test_matches_scalar_oracle(self):
        """Test the seed-13 two-node instance against the scalar TV oracle."""
        g = path_graph("ab")
        inst = random_scalar_instance(np.random.default_rng(13), g, eta=0.5)
        reference = scalar_tv_oracle(inst)
        data = inst.to_node_data()
        result = tv_solve(g, data, TvConfig(eta=0.5, max_iters=20000))
        assert tv_objective(g, data, result.W, 0.01, 0.5) == pytest.approx(reference.objective, abs=1e-3)

    def test_windowed_trend_non_increasing(self):
        """Test the objective averaged over 100-round windows never rises."""
        data = random_data(np.random.default_rng(4), 3, 8, 4, 2)
        result = tv_solve(path_graph("abc"), data, TvConfig(eta=0.1, max_iters=2000, record_trace=True))
        means = windowed_means(result.trace.objectives, 100)
        assert len(means) == 20
        assert np.all(np.diff(means) <= 1e-6 * abs(means[0]))
        assert means[-1] < means[0]

    def test_permutation_symmetry(self):
        """Test relabeling nodes permutes the solution."""
        data = random_data(np.random.default_rng(5), 3, 5, 3, 2)
        g = LanguageGraph(labels=tuple("abc"), edges=frozenset({(0, 1), (1, 2)}))
        perm = [2, 0, 1]
        inverse = {old: new for new, old in enumerate(perm)}
        permuted_graph = LanguageGraph(
            labels=tuple(g.labels[p] for p in perm),
            edges=frozenset((inverse[i], inverse[j]) for i, j in g.edges),
        )
        permuted_data = [NodeData(node=k, E_V=data[p].E_V, E_A=data[p].E_A) for k, p in enumerate(perm)]
        cfg = TvConfig(eta=0.3, max_iters=200)
        base = tv_solve(g, data, cfg)
        moved = tv_solve(permuted_graph, permuted_data, cfg)
        for k, p in enumerate(perm):
            np.testing.assert_allclose(moved.W[k], base.W[p], rtol=0, atol=1e-12)

    def test_executor_is_bit_identical(self):
        """Test parallel node updates do not change the result."""
        data = random_data(np.random.default_rng(6), 4, 5, 3, 2)
        g = complete_graph("abcd")
        cfg = TvConfig(max_iters=100, eta=0.2)
        serial = tv_solve(g, data, cfg)
        with ThreadPoolExecutor(max_workers=4) as pool:
            parallel = tv_solve(g, data, cfg, executor=pool)
        for A, B in zip(serial.W, parallel.W):
            assert np.array_equal(A, B)

    def test_divergence_guard(self):
        """Test a huge step size aborts with the iteration index."""
        data = random_data(np.random.default_rng(7), 2, 10, 4, 2)
        with pytest.raises(SolverError, match="smaller alpha") as info:
            tv_solve(path_graph("ab"), data, TvConfig(alpha=100.0, max_iters=500))
        assert info.value.iteration is not None

    def test_warm_start(self):
        """Test warm start begins at the ridge solutions."""
        data = random_data(np.random.default_rng(8), 1, 6, 3, 2)
        result = tv_solve(empty_graph(["a"]), data, TvConfig(max_iters=1, warm_start=True))
        ridge = ridge_align(data[0], 0.01)
        # Gradient at the ridge solution is ~0, so one step barely moves
        np.testing.assert_allclose(result.W[0], ridge, atol=1e-9)


class TestHelpers:
    """Test schedule and smoothing helpers."""

    def test_step_size(self):
        """Test the diminishing schedule."""
        assert step_size(0.01, 0) == 0.01
        assert step_size(0.01, 3) == 0.005

    def test_windowed_means_drops_tail(self):
        """Test a partial last window is ignored."""
        np.testing.assert_allclose(windowed_means(np.arange(250.0), 100), [49.5, 149.5])
