"""Total-variation penalized subgradient descent over a language graph."""

import csv
import io
import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from lago.core.align import AlignmentMap, NodeData, alignment_gradient, check_common_shape, ridge_align, ridge_objective
from lago.core.graph import LanguageGraph
from lago.errors import DataError, ShapeError, SolverError

logger = logging.getLogger(__name__)

LOG_EVERY = 100

# Any iterate entry beyond this magnitude is treated as divergence
DIVERGENCE_BOUND = 1e12


@dataclass
class TvConfig:
    """Parameters of the TV subgradient solver."""

    lam: float = 0.01
    eta: float = 0.01
    alpha: float = 0.01
    max_iters: int = 500
    record_trace: bool = False
    warm_start: bool = False

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DataError(f"alpha must be positive, got {self.alpha}")
        if not (self.eta >= 0 and math.isfinite(self.eta)):
            raise DataError(f"eta must be nonnegative, got {self.eta}")
        if not self.lam >= 0:
            raise DataError(f"lambda must be nonnegative, got {self.lam}")
        if self.max_iters < 1:
            raise DataError(f"max_iters must be at least 1, got {self.max_iters}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam,
            "eta": self.eta,
            "alpha": self.alpha,
            "max_iters": self.max_iters,
            "record_trace": self.record_trace,
            "warm_start": self.warm_start,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TvConfig":
        return cls(
            lam=data.get("lambda", 0.01),
            eta=data.get("eta", 0.01),
            alpha=data.get("alpha", 0.01),
            max_iters=data.get("max_iters", 500),
            record_trace=data.get("record_trace", False),
            warm_start=data.get("warm_start", False),
        )


@dataclass
class TvTrace:
    """Per-round TV objective (after the update) and the step size used."""

    rows: List[Tuple[int, float, float]] = field(default_factory=list)

    COLUMNS = ("iter", "tv_objective", "step_size")

    def append(self, t: int, objective: float, step_size: float) -> None:
        self.rows.append((t, objective, step_size))

    @property
    def objectives(self) -> np.ndarray:
        return np.array([row[1] for row in self.rows])

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        writer.writerows(self.rows)
        return buffer.getvalue()


@dataclass
class TvResult:
    W: AlignmentMap
    iterations: int
    trace: Optional[TvTrace] = None


def step_size(alpha: float, t: int) -> float:
    """Diminishing step alpha / sqrt(t + 1)."""
    return alpha / math.sqrt(t + 1)


def tv_objective(
    g: LanguageGraph,
    data: Sequence[NodeData],
    W: Sequence[np.ndarray],
    lam: float,
    eta: float,
) -> float:
    """
    Ridge terms of all nodes plus eta times the entry-wise l1 norm of every
    edge difference, each undirected edge counted once.
    """
    if len(W) != g.size or len(data) != g.size:
        raise ShapeError(f"Graph has {g.size} nodes; got {len(data)} data blocks and {len(W)} maps")
    smooth = sum(ridge_objective(d, W_i, lam) for d, W_i in zip(data, W))
    tv = sum(float(np.sum(np.abs(W[i] - W[j]))) for i, j in g.sorted_edges())
    return float(smooth + eta * tv)


def windowed_means(values: np.ndarray, window: int = 100) -> np.ndarray:
    """Means over consecutive non-overlapping windows; a short tail is dropped."""
    values = np.asarray(values, dtype=np.float64)
    count = len(values) // window
    return values[: count * window].reshape(count, window).mean(axis=1)


def tv_solve(
    g: LanguageGraph,
    data: Sequence[NodeData],
    cfg: TvConfig,
    executor: Optional[Executor] = None,
) -> TvResult:
    """
    Run synchronous TV subgradient rounds.

    Round t moves every node along the ridge gradient plus
    ``eta * sum_j sign(W_i - W_j)`` with step ``alpha / sqrt(t + 1)``, all
    nodes reading round-t iterates. ``sign(0) = 0``.

    Args:
        g: Language graph; node i pairs with data[i]
        data: Per-node training embeddings sharing m and n
        cfg: Solver configuration
        executor: Optional executor for the per-node update

    Returns:
        TvResult with the final maps and, if requested, the trace

    Raises:
        ShapeError: If node dimensions differ or the graph does not match data
        SolverError: If an iterate diverges
    """
    if len(data) != g.size:
        raise ShapeError(f"Graph has {g.size} nodes but {len(data)} data blocks were given")
    m, n = check_common_shape(data)
    neighbors = [g.neighbors(i) for i in range(g.size)]

    if cfg.warm_start:
        W = [ridge_align(d, cfg.lam) for d in data]
    else:
        W = [np.zeros((m, n)) for _ in data]

    trace = TvTrace() if cfg.record_trace else None

    for t in range(cfg.max_iters):
        alpha_t = step_size(cfg.alpha, t)
        current = W

        def update_node(i: int) -> np.ndarray:
            direction = alignment_gradient(data[i], current[i], cfg.lam)
            if cfg.eta:
                coupling = np.zeros((m, n))
                for j in neighbors[i]:
                    coupling += np.sign(current[i] - current[j])
                direction = direction + cfg.eta * coupling
            return current[i] - alpha_t * direction

        if executor is not None:
            W = list(executor.map(update_node, range(g.size)))
        else:
            W = [update_node(i) for i in range(g.size)]

        for W_i in W:
            if not np.all(np.isfinite(W_i)) or np.max(np.abs(W_i)) > DIVERGENCE_BOUND:
                raise SolverError(
                    f"TV iterates diverged; try a smaller alpha (now {cfg.alpha})", iteration=t
                )

        if trace is not None:
            trace.append(t, tv_objective(g, data, W, cfg.lam, cfg.eta), alpha_t)
        if t % LOG_EVERY == 0:
            logger.debug("tv iter=%d step=%.3g", t, alpha_t)

    logger.info("tv finished iters=%d eta=%g", cfg.max_iters, cfg.eta)
    return TvResult(W=AlignmentMap(W), iterations=cfg.max_iters, trace=trace)
