"""End-to-end property checks of the solvers and the experiment pipeline."""

import math
import random

import numpy as np
import pytest

from lago.core.align import NodeData, pooled_ridge_align, ridge_align
from lago.core.graph import build_graph, complete_graph, empty_graph, load_distance_matrix, path_graph
from lago.core.metrics import lcs_length, rouge_l, tokenize
from lago.services.experiment import ExperimentConfig
from lago.services.runner import ExperimentRunner, run_experiment
from lago.solvers.oracle import random_scalar_instance, scalar_ineq_oracle, scalar_tv_oracle
from lago.solvers.pdmm import PdmmConfig, constrained_objective, max_violation, pdmm_solve
from lago.solvers.tv import TvConfig, tv_objective, tv_solve

from tests.test_align import random_node
from tests.test_graph import FIXTURE, edge_labels
from tests.test_metrics import brute_force_lcs

# Few-shot transfer instance: 4 languages, complete graph, 10 training pairs each
TRANSFER = {
    "n_nodes": 4,
    "topology": "complete",
    "m": 32,
    "n": 16,
    "b_train": 10,
    "b_test": 200,
    "delta": 0.05,
    "sigma": 0.1,
    "lambda": 0.01,
    "seeds": list(range(10)),
}


def transfer_config(**kwargs):
    return ExperimentConfig.model_validate({**TRANSFER, **kwargs})


async def mean_cosine_of(config, workers=4):
    runner = ExperimentRunner(workers=workers)
    try:
        report = await runner.run(config)
    finally:
        runner.shutdown()
    return report.aggregates()[0]["mean_cosine_mean"], report


def path_instance(seed=3):
    rng = np.random.default_rng(seed)
    return [random_node(rng, b=5, m=8, n=6, node=i) for i in range(3)]


def relative(A, B):
    return np.linalg.norm(A - B) / np.linalg.norm(B)


class TestGraphExample:
    """Test the eng/fra/ita threshold example."""

    def test_four_topologies(self):
        """Test each threshold yields its exact edge set."""
        D = load_distance_matrix(FIXTURE)
        expected = {
            0.45: set(),
            0.47: {frozenset(("eng", "fra"))},
            0.52: {frozenset(("eng", "fra")), frozenset(("eng", "ita"))},
            0.56: {frozenset(("eng", "fra")), frozenset(("eng", "ita")), frozenset(("fra", "ita"))},
        }
        for r, edges in expected.items():
            assert edge_labels(build_graph(D, r)) == edges


class TestPdmmReductions:
    """Test PDMM against its closed-form limits."""

    def test_inactive_constraints_give_ridge(self):
        """Test epsilon 1e6 on a three-node path reproduces per-node ridge."""
        data = path_instance()
        g = path_graph("abc")
        result = pdmm_solve(g, data, PdmmConfig(epsilon=1e6, max_iters=2000))
        for d, W in zip(data, result.W):
            assert relative(W, ridge_align(d, 0.01)) <= 1e-6
        assert max_violation(g, result.W) <= 1e6 + 1e-6

    def test_zero_epsilon_gives_consensus(self):
        """Test epsilon 0 on a three-node path reproduces the pooled ridge map."""
        data = path_instance()
        g = path_graph("abc")
        result = pdmm_solve(g, data, PdmmConfig(epsilon=0.0, max_iters=5000))
        pooled = pooled_ridge_align(data, 0.01)
        for W in result.W:
            assert relative(W, pooled) <= 1e-4
        assert max_violation(g, result.W) <= 1e-6

    @pytest.mark.slow
    def test_scalar_instances_match_oracle(self):
        """Test 20 scalar instances against the active-set oracle."""
        graphs = [path_graph("ab"), path_graph("abc"), complete_graph("abc")]
        epsilons = [0.01, 0.05, 0.5]
        for k in range(20):
            g = graphs[k % 3]
            eps = epsilons[(k // 3) % 3]
            inst = random_scalar_instance(np.random.default_rng(100 + k), g, epsilon=eps)
            reference = scalar_ineq_oracle(inst)
            data = inst.to_node_data()
            result = pdmm_solve(g, data, PdmmConfig(epsilon=eps, max_iters=8000))
            w = np.array([W[0, 0] for W in result.W])
            assert constrained_objective(data, result.W, 0.01) == pytest.approx(reference.objective, abs=1e-6)
            np.testing.assert_allclose(w, reference.w, atol=1e-4)
            assert max_violation(g, result.W) <= eps + 1e-6


class TestTvReductions:
    """Test the TV solver against its closed-form and oracle limits."""

    def test_decoupled_node_reaches_ridge(self):
        """Test eta 0 on one well-conditioned node converges to ridge and matches plain descent."""
        rng = np.random.default_rng(17)
        U, _ = np.linalg.qr(rng.normal(size=(6, 4)))
        V, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        E_V = U @ np.diag(rng.uniform(3.0, 5.0, 4)) @ V.T
        E_A = rng.normal(size=(6, 3))
        d = NodeData(node=0, E_V=E_V, E_A=E_A)

        result = tv_solve(empty_graph(["a"]), [d], TvConfig(eta=0.0, alpha=0.01, max_iters=10000))
        assert relative(result.W[0], ridge_align(d, 0.01)) <= 1e-3

        W = np.zeros((4, 3))
        for t in range(10000):
            W = W - 0.01 / math.sqrt(t + 1) * (-E_V.T @ (E_A - E_V @ W) + 0.01 * W)
        assert np.array_equal(result.W[0], W)

    @pytest.mark.slow
    @pytest.mark.parametrize("eta", [0.1, 0.5])
    def test_scalar_pair_matches_oracle(self, eta):
        """Test two-node scalar instances against the TV oracle."""
        g = path_graph("ab")
        for seed in (13, 14):
            inst = random_scalar_instance(np.random.default_rng(seed), g, eta=eta)
            reference = scalar_tv_oracle(inst)
            data = inst.to_node_data()
            result = tv_solve(g, data, TvConfig(eta=eta, max_iters=20000))
            assert tv_objective(g, data, result.W, 0.01, eta) == pytest.approx(reference.objective, abs=1e-3)


class TestRougeL:
    """Test the Rouge-L examples and LCS against brute force."""

    def test_examples(self):
        """Test identical, disjoint and one-substitution pairs."""
        assert rouge_l(tokenize("a b c"), tokenize("a b c")) == (1.0, 1.0, 1.0)
        assert rouge_l(tokenize("a b"), tokenize("c d")) == (0.0, 0.0, 0.0)
        score = rouge_l(tokenize("the cat sat"), tokenize("the dog sat"))
        assert score.f1 == pytest.approx(2 / 3)

    def test_lcs_brute_force(self):
        """Test 200 random pairs of length up to 10."""
        rnd = random.Random(2024)
        for _ in range(200):
            a = [rnd.choice("abcd") for _ in range(rnd.randint(0, 10))]
            b = [rnd.choice("abcd") for _ in range(rnd.randint(0, 10))]
            assert lcs_length(a, b) == brute_force_lcs(a, b)


@pytest.mark.slow
class TestFewShotTransfer:
    """Test graph coupling helps few-shot alignment on synthetic data."""

    @pytest.mark.asyncio
    async def test_constrained_beats_independent(self):
        """Test PDMM at epsilon 0.01 improves mean cosine by at least 0.02."""
        baseline, _ = await mean_cosine_of(transfer_config(method="closed"))
        coupled, report = await mean_cosine_of(transfer_config(method="pdmm", epsilon=0.01))
        assert coupled > baseline
        assert coupled - baseline >= 0.02
        assert all(o.evaluation.max_violation <= 0.01 + 1e-6 for o in report.outcomes)

    @pytest.mark.asyncio
    async def test_total_variation_beats_independent(self):
        """Test TV at eta 0.01 improves mean cosine by at least 0.02."""
        baseline, _ = await mean_cosine_of(transfer_config(method="closed"))
        coupled, report = await mean_cosine_of(transfer_config(method="tv", eta=0.01, max_iters=10000))
        assert coupled > baseline
        assert coupled - baseline >= 0.02
        assert len(report.outcomes) == 10

    @pytest.mark.asyncio
    async def test_held_out_error(self):
        """Test the seed-1 instance has lower held-out error with coupling."""
        config = {"seeds": [1]}
        _, independent = await mean_cosine_of(transfer_config(method="closed", **config))
        _, coupled = await mean_cosine_of(transfer_config(method="pdmm", **config))
        independent_error = independent.aggregates()[0]["test_rel_error_mean"]
        coupled_error = coupled.aggregates()[0]["test_rel_error_mean"]
        assert coupled_error < independent_error

    @pytest.mark.asyncio
    async def test_epsilon_sweep(self):
        """Test the epsilon sweep has four rows per seed and node and tighter is better."""
        runner = ExperimentRunner(workers=4)
        try:
            report = await runner.run(transfer_config(seeds=[0, 1]), "epsilon", [0.001, 0.01, 0.1, 1e6])
        finally:
            runner.shutdown()
        rows = report.rows()
        for seed in (0, 1):
            for node in range(4):
                assert len([r for r in rows if r["seed"] == seed and r["node"] == node]) == 4
        by_value = {a["sweep_value"]: a["mean_cosine_mean"] for a in report.aggregates()}
        assert by_value[0.001] > by_value[1e6]

    @pytest.mark.asyncio
    async def test_noise_defense(self):
        """Test Laplace noise of scale 1 at least halves the mean cosine."""
        clean, _ = await mean_cosine_of(transfer_config())
        noisy, _ = await mean_cosine_of(transfer_config(noise="laplace", noise_scale=1.0))
        assert noisy <= 0.5 * clean

    @pytest.mark.asyncio
    async def test_worker_count_determinism(self, tmp_path):
        """Test one and four workers write byte-identical report.json."""
        for workers in (1, 4):
            config = transfer_config(workers=workers, output_dir=tmp_path / f"w{workers}")
            await run_experiment(config)
        assert (tmp_path / "w1" / "report.json").read_bytes() == (tmp_path / "w4" / "report.json").read_bytes()
