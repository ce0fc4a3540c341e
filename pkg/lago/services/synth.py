"""Deterministic synthetic multilingual alignment instances."""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from lago.core.align import AlignmentMap, NodeData
from lago.core.container import EMBEDDING_SUFFIX, MAP_SUFFIX, load_matrix, save_matrix
from lago.core.graph import LanguageGraph, complete_graph, connected_components, graph_from_dict, graph_to_dict, hop_distances
from lago.errors import DataError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class DeviationMode(Enum):
    """How ground-truth transforms deviate across nodes."""
    SHARED = "shared"
    DISTANCE = "distance"


class Role(Enum):
    """Matrix roles; each keys its own random stream."""
    BASE = 0
    DEVIATION = 1
    TRAIN_V = 2
    TRAIN_NOISE = 3
    TEST_V = 4
    TEST_NOISE = 5


@dataclass
class SynthSpec:
    """Recipe for a synthetic instance."""

    n_nodes: int = 4
    m: int = 32
    n: int = 16
    b_train: int = 10
    b_test: int = 200
    delta: float = 0.05
    sigma: float = 0.1
    seed: int = 0
    graph: Optional[LanguageGraph] = None
    mode: DeviationMode = DeviationMode.SHARED

    def __post_init__(self):
        for name in ("n_nodes", "m", "n", "b_train", "b_test"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be at least 1, got {getattr(self, name)}")
        if not (self.delta >= 0 and self.sigma >= 0):
            raise DataError("delta and sigma must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise DataError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        self.mode = DeviationMode(self.mode)
        if self.graph is None:
            self.graph = complete_graph(f"L{i}" for i in range(self.n_nodes))
        if self.graph.size != self.n_nodes:
            raise DataError(f"Graph has {self.graph.size} nodes, spec asks for {self.n_nodes}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_nodes": self.n_nodes,
            "m": self.m,
            "n": self.n,
            "b_train": self.b_train,
            "b_test": self.b_test,
            "delta": self.delta,
            "sigma": self.sigma,
            "seed": self.seed,
            "mode": self.mode.value,
            "graph": graph_to_dict(self.graph),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SynthSpec":
        return cls(
            n_nodes=data["n_nodes"],
            m=data["m"],
            n=data["n"],
            b_train=data["b_train"],
            b_test=data["b_test"],
            delta=data["delta"],
            sigma=data["sigma"],
            seed=data["seed"],
            mode=DeviationMode(data.get("mode", "shared")),
            graph=graph_from_dict(data["graph"]) if data.get("graph") else None,
        )


@dataclass
class SynthInstance:
    spec: SynthSpec
    train: List[NodeData]
    test: List[NodeData]
    truth: AlignmentMap
    labels: List[str] = field(default_factory=list)

    @property
    def graph(self) -> LanguageGraph:
        return self.spec.graph


def stream(seed: int, role: Role, node: int = 0) -> np.random.Generator:
    """
    Counter-based generator keyed by (seed, role, node).

    Values depend only on the key and the position within the stream, never
    on the order in which streams are created.
    """
    key = np.random.SeedSequence(entropy=seed, spawn_key=(role.value, node))
    return np.random.Generator(np.random.Philox(key))


def _truth_transforms(spec: SynthSpec) -> List[np.ndarray]:
    base = stream(spec.seed, Role.BASE).standard_normal((spec.m, spec.n))
    deviations = [
        stream(spec.seed, Role.DEVIATION, i).standard_normal((spec.m, spec.n))
        for i in range(spec.n_nodes)
    ]
    if spec.mode is DeviationMode.SHARED:
        return [base + spec.delta * dev for dev in deviations]

    # Distance mode: accumulate deviations along BFS trees, so the expected
    # gap between two transforms grows with their hop distance
    truth: List[Optional[np.ndarray]] = [None] * spec.n_nodes
    for component in connected_components(spec.graph):
        root = component[0]
        hops = hop_distances(spec.graph, root)
        truth[root] = base + spec.delta * deviations[root]
        for node in sorted(component[1:], key=lambda k: (hops[k], k)):
            parent = min(p for p in spec.graph.neighbors(node) if hops[p] == hops[node] - 1)
            truth[node] = truth[parent] + spec.delta * deviations[node]
    return truth


def generate(spec: SynthSpec) -> SynthInstance:
    """
    Draw a synthetic instance.

    W*_i = W0 + delta * Delta_i with unit-variance W0 and Delta_i (or the
    BFS-accumulated variant in distance mode); victim rows are unit-variance
    and ``E_A = E_V W*_i + sigma * noise``.
    """
    truth = _truth_transforms(spec)
    train, test = [], []
    for i, W_star in enumerate(truth):
        for split, v_role, noise_role, rows in (
            (train, Role.TRAIN_V, Role.TRAIN_NOISE, spec.b_train),
            (test, Role.TEST_V, Role.TEST_NOISE, spec.b_test),
        ):
            E_V = stream(spec.seed, v_role, i).standard_normal((rows, spec.m))
            noise = stream(spec.seed, noise_role, i).standard_normal((rows, spec.n))
            E_A = E_V @ W_star + spec.sigma * noise
            split.append(NodeData(node=i, E_V=E_V, E_A=E_A))

    logger.debug(
        "synth instance seed=%d nodes=%d m=%d n=%d b_train=%d",
        spec.seed, spec.n_nodes, spec.m, spec.n, spec.b_train,
    )
    return SynthInstance(
        spec=spec, train=train, test=test, truth=AlignmentMap(truth), labels=list(spec.graph.labels)
    )


def save_instance(instance: SynthInstance, directory: Path) -> Path:
    """
    Write per-node binary embeddings, ground-truth maps and a manifest.

    Returns:
        Path to manifest.json
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files: Dict[str, Dict[str, str]] = {}
    for i, label in enumerate(instance.labels):
        entry = {
            "train_V": f"train_V_{label}{EMBEDDING_SUFFIX}",
            "train_A": f"train_A_{label}{EMBEDDING_SUFFIX}",
            "test_V": f"test_V_{label}{EMBEDDING_SUFFIX}",
            "test_A": f"test_A_{label}{EMBEDDING_SUFFIX}",
            "truth": f"truth_{label}{MAP_SUFFIX}",
        }
        save_matrix(directory / entry["train_V"], instance.train[i].E_V)
        save_matrix(directory / entry["train_A"], instance.train[i].E_A)
        save_matrix(directory / entry["test_V"], instance.test[i].E_V)
        save_matrix(directory / entry["test_A"], instance.test[i].E_A)
        save_matrix(directory / entry["truth"], instance.truth[i])
        files[label] = entry

    manifest = {
        "spec": instance.spec.to_dict(),
        "seed": instance.spec.seed,
        "labels": instance.labels,
        "files": files,
    }
    path = directory / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("synth instance written path=%s", path)
    return path


def load_instance(manifest_path: Path) -> SynthInstance:
    """Read an instance written by save_instance."""
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DataError(f"Cannot read manifest {manifest_path}: {e}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"Invalid manifest {manifest_path}: {e}") from e

    base = manifest_path.parent
    spec = SynthSpec.from_dict(manifest["spec"])
    train, test, truth = [], [], []
    for i, label in enumerate(manifest["labels"]):
        entry = manifest["files"][label]
        train.append(NodeData(node=i, E_V=load_matrix(base / entry["train_V"]), E_A=load_matrix(base / entry["train_A"])))
        test.append(NodeData(node=i, E_V=load_matrix(base / entry["test_V"]), E_A=load_matrix(base / entry["test_A"])))
        truth.append(load_matrix(base / entry["truth"]))
    return SynthInstance(spec=spec, train=train, test=test, truth=AlignmentMap(truth), labels=list(manifest["labels"]))


def noise_std(instance: SynthInstance, node: int) -> float:
    """Empirical std of E_A - E_V W*_i on the held-out split."""
    d = instance.test[node]
    residual = d.E_A - d.E_V @ instance.truth[node]
    return float(np.std(residual))

