"""Experiment configuration and the per-seed pipeline."""

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from lago.config import settings
from lago.core.align import AlignmentMap, NodeData, normalize_rows, ridge_align_all
from lago.core.graph import LanguageGraph, build_graph, complete_graph, empty_graph, load_distance_matrix, path_graph
from lago.core.metrics import EvalResult, evaluate
from lago.errors import DataError, LagoError, ShapeError, UsageError
from lago.services.noise import inject_noise
from lago.services.synth import SynthInstance, SynthSpec, generate, load_instance
from lago.solvers.pdmm import PdmmConfig, constrained_objective, max_violation, pdmm_solve
from lago.solvers.tv import TvConfig, tv_objective, tv_solve

logger = logging.getLogger(__name__)

# Config keys a sweep may vary, by their serialized name
SWEEP_PARAMS = ("epsilon", "eta", "b_train", "lambda", "noise_scale")

# Execution details that do not influence results; kept out of the report echo
ECHO_EXCLUDE = {"output_dir", "workers"}

TOPOLOGIES = {"complete": complete_graph, "path": path_graph, "empty": empty_graph}


class ExperimentConfig(BaseModel):
    """One experiment: data source, method, solver parameters, seeds, noise and outputs."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    name: str = "experiment"

    # Graph and data
    distance_matrix: Optional[Path] = None
    threshold: Optional[float] = None
    topology: Literal["complete", "path", "empty"] = "complete"
    instance: Optional[Path] = None

    # Synthetic instance recipe
    n_nodes: int = Field(4, ge=1)
    m: int = Field(32, ge=1)
    n: int = Field(16, ge=1)
    b_train: int = Field(10, ge=1)
    b_test: int = Field(200, ge=1)
    delta: float = Field(0.05, ge=0)
    sigma: float = Field(0.1, ge=0)
    deviation_mode: Literal["shared", "distance"] = "shared"

    # Solver
    method: Literal["closed", "pdmm", "tv"] = "pdmm"
    c: float = Field(default_factory=lambda: settings.c, gt=0)
    lam: float = Field(default_factory=lambda: settings.lam, ge=0, alias="lambda")
    epsilon: float = Field(default_factory=lambda: settings.epsilon, ge=0)
    eta: float = Field(default_factory=lambda: settings.eta, ge=0)
    alpha: float = Field(default_factory=lambda: settings.alpha, gt=0)
    max_iters: int = Field(default_factory=lambda: settings.max_iters, ge=1)
    stop_tol: Optional[float] = Field(None, gt=0)
    warm_start: bool = False
    normalize: bool = False

    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)

    # Defense noise on victim embeddings
    noise: Literal["none", "gaussian", "laplace"] = "none"
    noise_scale: float = Field(0.0, ge=0)

    # Outputs
    output_dir: Path = Field(default_factory=lambda: settings.output_dir)
    record_trace: bool = False
    save_maps: bool = False
    workers: int = Field(default_factory=lambda: settings.max_workers, ge=1)

    @field_validator("seeds")
    @classmethod
    def _check_seeds(cls, seeds: List[int]) -> List[int]:
        for seed in seeds:
            if not 0 <= seed < 2**64:
                raise ValueError(f"seed {seed} is not a 64-bit unsigned integer")
        if len(set(seeds)) != len(seeds):
            raise ValueError("seeds must be distinct")
        return seeds

    @model_validator(mode="after")
    def _check_sources(self) -> "ExperimentConfig":
        if self.distance_matrix is not None and self.threshold is None:
            raise ValueError("threshold is required with distance_matrix")
        return self

    def echo(self) -> Dict[str, Any]:
        """Serialized config as stored in report.json."""
        return self.model_dump(by_alias=True, exclude=ECHO_EXCLUDE)


def _validate(data: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise UsageError(f"Invalid experiment config: {e}") from e


def load_config(path: Optional[Path], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Build an ExperimentConfig from a JSON file and command-line overrides.

    Args:
        path: JSON config file, or None for defaults
        overrides: Values from flags; None entries are ignored and the rest
            win over the file. ``lam`` may be given under either name.

    Returns:
        Validated ExperimentConfig

    Raises:
        DataError: If the file cannot be read or is not JSON
        UsageError: If the merged values do not form a valid config
    """
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise DataError(f"Cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise DataError(f"Config {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise UsageError(f"Config {path} must hold a JSON object")
        if "lam" in data:
            data["lambda"] = data.pop("lam")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        data["lambda" if key == "lam" else key] = value
    return _validate(data)


def with_value(config: ExperimentConfig, param: str, value: float) -> ExperimentConfig:
    """Copy of config with one sweepable parameter replaced."""
    if param not in SWEEP_PARAMS:
        raise UsageError(f"Cannot sweep '{param}' (expected one of: {', '.join(SWEEP_PARAMS)})")
    if param == "b_train":
        if float(value) != int(value):
            raise UsageError(f"b_train must be an integer, got {value}")
        value = int(value)
    data = config.model_dump(by_alias=True)
    data[param] = value
    return _validate(data)


@dataclass
class Problem:
    graph: LanguageGraph
    train: List[NodeData]
    test: List[NodeData]

    @property
    def labels(self) -> List[str]:
        return list(self.graph.labels)


@dataclass
class SeedOutcome:
    """Result of one seed of one (possibly swept) configuration."""

    seed: int
    method: str
    labels: List[str]
    evaluation: EvalResult
    iterations: int
    W: AlignmentMap
    sweep_value: Optional[float] = None
    trace_csv: Optional[str] = None
    timings: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "sweep_value": self.sweep_value,
            "method": self.method,
            "labels": self.labels,
            "iterations": self.iterations,
            "evaluation": self.evaluation.to_dict(),
        }

    def rows(self, sweep_param: Optional[str] = None) -> List[Dict[str, Any]]:
        """Per-node report rows."""
        ev = self.evaluation
        return [
            {
                "seed": self.seed,
                "sweep_param": sweep_param or "",
                "sweep_value": "" if self.sweep_value is None else self.sweep_value,
                "method": self.method,
                "node": i,
                "label": label,
                "cosine": ev.per_node_cosine[i],
                "test_rel_error": ev.test_rel_error[i],
                "objective": ev.objective,
                "max_violation": ev.max_violation,
            }
            for i, label in enumerate(self.labels)
        ]


@contextmanager
def stage(name: str, timings: Dict[str, float]) -> Iterator[None]:
    """Time a pipeline stage and tag toolkit errors raised inside it."""
    start = time.perf_counter()
    try:
        yield
    except LagoError as e:
        if e.stage is None:
            e.stage = name
        raise
    finally:
        timings[name] = time.perf_counter() - start


def resolve_graph(config: ExperimentConfig) -> Optional[LanguageGraph]:
    """
    Graph named by the config.

    Returns None when the graph comes from an exported instance.
    """
    if config.distance_matrix is not None:
        return build_graph(load_distance_matrix(Path(config.distance_matrix)), config.threshold)
    if config.instance is not None:
        return None
    return TOPOLOGIES[config.topology](f"L{i}" for i in range(config.n_nodes))


def load_source(config: ExperimentConfig) -> Tuple[Optional[LanguageGraph], Optional[SynthInstance]]:
    """Load the seed-independent inputs once per experiment."""
    graph = resolve_graph(config)
    instance = load_instance(Path(config.instance)) if config.instance is not None else None
    if graph is not None and instance is not None and graph.size != len(instance.labels):
        raise ShapeError(f"Graph has {graph.size} nodes but the instance has {len(instance.labels)}")
    return graph, instance


def _perturb(data: Sequence[NodeData], config: ExperimentConfig, seed: int, split: int) -> List[NodeData]:
    result = []
    for d in data:
        E_V = inject_noise(d.E_V, config.noise, config.noise_scale, (seed, split, d.node))
        E_A = d.E_A
        if config.normalize:
            E_V, E_A = normalize_rows(E_V), normalize_rows(E_A)
        result.append(NodeData(node=d.node, E_V=E_V, E_A=E_A))
    return result


def prepare_problem(
    config: ExperimentConfig,
    seed: int,
    graph: Optional[LanguageGraph],
    instance: Optional[SynthInstance] = None,
) -> Problem:
    """Instance for one seed, with defense noise and normalization applied."""
    if instance is None:
        spec = SynthSpec(
            n_nodes=graph.size,
            m=config.m,
            n=config.n,
            b_train=config.b_train,
            b_test=config.b_test,
            delta=config.delta,
            sigma=config.sigma,
            seed=seed,
            graph=graph,
            mode=config.deviation_mode,
        )
        instance = generate(spec)
    if graph is None:
        graph = instance.graph

    # Noise is keyed by (seed, split, node) so both splits get independent draws
    return Problem(
        graph=graph,
        train=_perturb(instance.train, config, seed, 0),
        test=_perturb(instance.test, config, seed, 1),
    )


def solve(config: ExperimentConfig, problem: Problem) -> Tuple[AlignmentMap, int, float, Optional[str]]:
    """
    Run the configured method.

    Returns:
        Tuple of (maps, iterations, objective, trace CSV or None)
    """
    g, train = problem.graph, problem.train
    if config.method == "closed":
        W = ridge_align_all(train, config.lam)
        return W, 0, constrained_objective(train, W, config.lam), None

    if config.method == "pdmm":
        cfg = PdmmConfig(
            c=config.c,
            lam=config.lam,
            epsilon=config.epsilon,
            max_iters=config.max_iters,
            stop_tol=config.stop_tol,
            record_trace=config.record_trace,
        )
        result = pdmm_solve(g, train, cfg)
        trace = result.trace.to_csv() if result.trace is not None else None
        return result.W, result.iterations, constrained_objective(train, result.W, config.lam), trace

    cfg = TvConfig(
        lam=config.lam,
        eta=config.eta,
        alpha=config.alpha,
        max_iters=config.max_iters,
        record_trace=config.record_trace,
        warm_start=config.warm_start,
    )
    result = tv_solve(g, train, cfg)
    trace = result.trace.to_csv() if result.trace is not None else None
    objective = tv_objective(g, train, result.W, config.lam, config.eta)
    return result.W, result.iterations, objective, trace


def run_seed(
    config: ExperimentConfig,
    seed: int,
    graph: Optional[LanguageGraph],
    instance: Optional[SynthInstance] = None,
    sweep_value: Optional[float] = None,
) -> SeedOutcome:
    """
    Full pipeline for one seed: instance, solve, evaluate.

    Raises:
        LagoError: Tagged with the failing stage (synth, solve or eval)
    """
    timings: Dict[str, float] = {}
    with stage("synth", timings):
        problem = prepare_problem(config, seed, graph, instance)
    with stage("solve", timings):
        W, iterations, objective, trace = solve(config, problem)
    with stage("eval", timings):
        evaluation = evaluate(problem.test, W, objective, max_violation(problem.graph, W))

    logger.info(
        "seed done seed=%d method=%s mean_cosine=%.4f solve_s=%.3f",
        seed,
        config.method,
        evaluation.mean_cosine,
        timings["solve"],
    )
    return SeedOutcome(
        seed=seed,
        method=config.method,
        labels=problem.labels,
        evaluation=evaluation,
        iterations=iterations,
        W=W,
        sweep_value=sweep_value,
        trace_csv=trace,
        timings=timings,
    )
