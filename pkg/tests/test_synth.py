"""Tests for the synthetic instance generator."""

import json

import numpy as np
import pytest

from lago.core.align import ridge_align
from lago.core.graph import LanguageGraph, path_graph
from lago.errors import DataError
from lago.services.synth import (
    MANIFEST_NAME,
    DeviationMode,
    Role,
    SynthSpec,
    generate,
    load_instance,
    noise_std,
    save_instance,
    stream,
)


def small_spec(**kwargs):
    params = dict(n_nodes=3, m=4, n=3, b_train=10, b_test=20, seed=5)
    params.update(kwargs)
    return SynthSpec(**params)


class TestSynthSpec:
    """Test instance recipes."""

    def test_default_graph_is_complete(self):
        """Test a missing graph becomes the complete graph on L0..L(N-1)."""
        spec = SynthSpec(n_nodes=3)
        assert spec.graph.labels == ("L0", "L1", "L2")
        assert len(spec.graph.edges) == 3

    @pytest.mark.parametrize(
        "kwargs",
        [{"m": 0}, {"b_train": 0}, {"delta": -0.1}, {"sigma": -1.0}, {"seed": -1}, {"seed": 2**64}],
    )
    def test_invalid(self, kwargs):
        """Test out-of-range parameters raise DataError."""
        with pytest.raises(DataError):
            small_spec(**kwargs)

    def test_graph_size_mismatch(self):
        """Test the graph must have n_nodes nodes."""
        with pytest.raises(DataError):
            small_spec(graph=path_graph("ab"))

    def test_dict_roundtrip(self):
        """Test dictionary serialization."""
        spec = small_spec(mode="distance", graph=path_graph("abc"))
        assert spec.mode is DeviationMode.DISTANCE
        assert SynthSpec.from_dict(spec.to_dict()) == spec


class TestStream:
    """Test keyed random streams."""

    def test_order_independent(self):
        """Test a stream does not depend on which streams were drawn before."""
        first = stream(7, Role.TRAIN_V, 2).standard_normal(5)
        stream(7, Role.BASE).standard_normal(100)
        stream(7, Role.TRAIN_V, 1).standard_normal(100)
        assert np.array_equal(stream(7, Role.TRAIN_V, 2).standard_normal(5), first)

    def test_keys_differ(self):
        """Test different roles and nodes give different draws."""
        a = stream(7, Role.TRAIN_V, 0).standard_normal(5)
        b = stream(7, Role.TEST_V, 0).standard_normal(5)
        c = stream(7, Role.TRAIN_V, 1).standard_normal(5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestGenerate:
    """Test instance generation."""

    def test_deterministic(self):
        """Test the same spec gives bit-identical instances."""
        a, b = generate(small_spec()), generate(small_spec())
        for d1, d2 in zip(a.train + a.test, b.train + b.test):
            assert np.array_equal(d1.E_V, d2.E_V)
            assert np.array_equal(d1.E_A, d2.E_A)
        assert np.array_equal(a.truth.stack(), b.truth.stack())

    def test_seed_changes_data(self):
        """Test a different seed gives different data."""
        a, b = generate(small_spec(seed=1)), generate(small_spec(seed=2))
        assert not np.array_equal(a.train[0].E_V, b.train[0].E_V)

    def test_shapes(self):
        """Test split sizes and labels."""
        inst = generate(small_spec())
        assert inst.labels == ["L0", "L1", "L2"]
        assert inst.train[1].E_V.shape == (10, 4)
        assert inst.test[1].E_A.shape == (20, 3)
        assert inst.truth.shape == (4, 3)

    def test_noiseless_shared_transform(self):
        """Test delta 0 and sigma 0 give one exact linear map recovered by ridge."""
        inst = generate(small_spec(delta=0.0, sigma=0.0))
        W0 = inst.truth[0]
        for i in range(3):
            assert np.array_equal(inst.truth[i], W0)
            np.testing.assert_array_equal(inst.train[i].E_A, inst.train[i].E_V @ W0)
            np.testing.assert_allclose(ridge_align(inst.train[i], 0.0), W0, atol=1e-8)

    def test_noise_level(self):
        """Test the held-out residual std is within 10% of sigma."""
        inst = generate(SynthSpec(n_nodes=2, m=8, n=16, b_test=200, sigma=0.1, seed=3))
        for i in range(2):
            assert noise_std(inst, i) == pytest.approx(0.1, rel=0.1)

    def test_shared_deviation_scale(self):
        """Test maps deviate from each other on the order of delta."""
        inst = generate(SynthSpec(n_nodes=2, m=16, n=16, delta=0.05, seed=4))
        gap = np.std(inst.truth[0] - inst.truth[1])
        # Difference of two independent delta-scaled normals
        assert gap == pytest.approx(0.05 * np.sqrt(2), rel=0.2)

    def test_distance_mode_accumulates(self):
        """Test neighbors on a path differ by one deviation step."""
        spec = small_spec(n_nodes=4, mode=DeviationMode.DISTANCE, graph=path_graph("abcd"), delta=0.1)
        inst = generate(spec)
        for node in (1, 2, 3):
            step = 0.1 * stream(5, Role.DEVIATION, node).standard_normal((4, 3))
            np.testing.assert_allclose(inst.truth[node] - inst.truth[node - 1], step, atol=1e-12)

    def test_distance_mode_disconnected(self):
        """Test each component is rooted at its smallest node."""
        g = LanguageGraph(labels=tuple("abcd"), edges=frozenset({(0, 1), (2, 3)}))
        spec = small_spec(n_nodes=4, mode=DeviationMode.DISTANCE, graph=g)
        inst = generate(spec)
        base = stream(5, Role.BASE).standard_normal((4, 3))
        root = base + spec.delta * stream(5, Role.DEVIATION, 2).standard_normal((4, 3))
        np.testing.assert_allclose(inst.truth[2], root, atol=1e-12)


class TestInstanceFiles:
    """Test writing and reading instances."""

    def test_roundtrip(self, tmp_path):
        """Test a saved instance loads back identically."""
        inst = generate(small_spec(graph=path_graph(["eng", "fra", "ita"])))
        manifest = save_instance(inst, tmp_path / "instance")
        assert manifest.name == MANIFEST_NAME
        loaded = load_instance(manifest)
        assert loaded.labels == ["eng", "fra", "ita"]
        assert loaded.spec == inst.spec
        for d1, d2 in zip(inst.train + inst.test, loaded.train + loaded.test):
            assert np.array_equal(d1.E_V, d2.E_V)
            assert np.array_equal(d1.E_A, d2.E_A)
        assert np.array_equal(loaded.truth.stack(), inst.truth.stack())

    def test_manifest_content(self, tmp_path):
        """Test the manifest records seed, labels and file names."""
        inst = generate(small_spec())
        manifest = json.loads(save_instance(inst, tmp_path).read_text())
        assert manifest["seed"] == 5
        assert manifest["labels"] == ["L0", "L1", "L2"]
        assert manifest["files"]["L1"]["truth"] == "truth_L1.lagomap"
        assert (tmp_path / "train_V_L0.lagoemb").exists()

    def test_missing_manifest(self, tmp_path):
        """Test a missing manifest raises DataError."""
        with pytest.raises(DataError, match="Cannot read"):
            load_instance(tmp_path / MANIFEST_NAME)

    def test_invalid_manifest(self, tmp_path):
        """Test malformed JSON raises DataError."""
        path = tmp_path / MANIFEST_NAME
        path.write_text("{not json")
        with pytest.raises(DataError, match="Invalid manifest"):
            load_instance(path)
