"""Inequality-constrained PDMM over a language graph.

Each edge {i, j} carries the entry-wise constraint ``||W_i - W_j||_max <= eps``
written as two constraint rows, ``W_lo - W_hi <= eps`` (row 0) and
``W_hi - W_lo <= eps`` (row 1) with lo < hi. Node i sees the edge through
``A_{i|j} = s_ij [1, -1]^T`` with ``s_ij = +1`` when i < j and ``-1`` otherwise,
so ``A_{i|j} = -A_{j|i}``. Duals ``Z_{i|j}`` and auxiliaries ``Y_{i|j}`` are
(2, m, n) arrays indexed by constraint row.
"""

import csv
import io
import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from lago.core.align import (
    AlignmentMap,
    NodeData,
    check_common_shape,
    factorize,
    ridge_align,
    ridge_objective,
    solve_factorized,
)
from lago.core.graph import LanguageGraph
from lago.errors import DataError, ShapeError, SolverError

logger = logging.getLogger(__name__)

LOG_EVERY = 100


@dataclass
class PdmmConfig:
    """Parameters of the inequality-constrained solver."""

    c: float = 0.4
    lam: float = 0.01
    epsilon: float = 0.01
    max_iters: int = 500
    stop_tol: Optional[float] = None
    record_trace: bool = False

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise DataError(f"c must be positive, got {self.c}")
        if not self.lam >= 0:
            raise DataError(f"lambda must be nonnegative, got {self.lam}")
        if not self.epsilon >= 0:
            raise DataError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.max_iters < 1:
            raise DataError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.stop_tol is not None and not self.stop_tol > 0:
            raise DataError(f"stop_tol must be positive, got {self.stop_tol}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "c": self.c,
            "lambda": self.lam,
            "epsilon": self.epsilon,
            "max_iters": self.max_iters,
            "stop_tol": self.stop_tol,
            "record_trace": self.record_trace,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PdmmConfig":
        return cls(
            c=data.get("c", 0.4),
            lam=data.get("lambda", 0.01),
            epsilon=data.get("epsilon", 0.01),
            max_iters=data.get("max_iters", 500),
            stop_tol=data.get("stop_tol"),
            record_trace=data.get("record_trace", False),
        )


@dataclass
class PdmmState:
    """Solver state; Z and Y are keyed by directed edge (i, j)."""

    W: List[np.ndarray]
    Z: Dict[Tuple[int, int], np.ndarray]
    Y: Dict[Tuple[int, int], np.ndarray]
    t: int = 0


@dataclass
class PdmmTrace:
    """Per-round objective, max constraint violation and max iterate change."""

    rows: List[Tuple[int, float, float, float]] = field(default_factory=list)

    COLUMNS = ("iter", "objective", "max_violation", "max_step")

    def append(self, t: int, objective: float, violation: float, step: float) -> None:
        self.rows.append((t, objective, violation, step))

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        writer.writerows(self.rows)
        return buffer.getvalue()


@dataclass
class PdmmResult:
    W: AlignmentMap
    iterations: int
    converged: bool
    trace: Optional[PdmmTrace] = None


def max_violation(g: LanguageGraph, W: Sequence[np.ndarray]) -> float:
    """Largest entry-wise difference across any edge; 0 without edges."""
    if len(W) != g.size:
        raise ShapeError(f"Graph has {g.size} nodes but {len(W)} maps were given")
    worst = 0.0
    for i, j in g.edges:
        worst = max(worst, float(np.max(np.abs(W[i] - W[j]))))
    return worst


def constrained_objective(data: Sequence[NodeData], W: Sequence[np.ndarray], lam: float) -> float:
    """Sum of the per-node ridge objectives."""
    return float(sum(ridge_objective(d, W_i, lam) for d, W_i in zip(data, W)))


def _orientation(i: int, j: int) -> float:
    return 1.0 if i < j else -1.0


def init_state(g: LanguageGraph, m: int, n: int) -> PdmmState:
    """All-zero duals for both directions of every edge."""
    Z = {}
    Y = {}
    for i, j in g.sorted_edges():
        for key in ((i, j), (j, i)):
            Z[key] = np.zeros((2, m, n))
            Y[key] = np.zeros((2, m, n))
    return PdmmState(W=[np.zeros((m, n)) for _ in range(g.size)], Z=Z, Y=Y)


def pdmm_solve(
    g: LanguageGraph,
    data: Sequence[NodeData],
    cfg: PdmmConfig,
    executor: Optional[Executor] = None,
) -> PdmmResult:
    """
    Run synchronous IEQ-PDMM rounds.

    Every round updates all W_i from the previous round's Z, then all Y from
    the new W, then exchanges Y across each edge into the next Z. Phases are
    separated, so passing an executor does not change the result.

    Args:
        g: Language graph; node i pairs with data[i]
        data: Per-node training embeddings sharing m and n
        cfg: Solver configuration
        executor: Optional executor for the per-node W phase

    Returns:
        PdmmResult with the final maps and, if requested, the trace

    Raises:
        ShapeError: If node dimensions differ or the graph does not match data
        RankDeficiencyError: If a node's system matrix is not positive definite
        SolverError: If the state becomes non-finite
    """
    if len(data) != g.size:
        raise ShapeError(f"Graph has {g.size} nodes but {len(data)} data blocks were given")
    m, n = check_common_shape(data)

    # Constraints can never bind: independent ridge per node
    if math.isinf(cfg.epsilon):
        logger.info("pdmm epsilon=inf, solving nodes independently nodes=%d", g.size)
        return PdmmResult(W=AlignmentMap(ridge_align(d, cfg.lam) for d in data), iterations=0, converged=True)

    c, eps = cfg.c, cfg.epsilon
    degrees = g.degrees
    neighbors = [g.neighbors(i) for i in range(g.size)]

    # Iteration-independent system matrices
    factors = [factorize(d.E_V, 2 * c * degrees[i] + cfg.lam) for i, d in enumerate(data)]
    rhs0 = [d.E_V.T @ d.E_A for d in data]

    state = init_state(g, m, n)
    trace = PdmmTrace() if cfg.record_trace else None
    converged = False

    def update_node(i: int) -> np.ndarray:
        dual = np.zeros((m, n))
        for j in neighbors[i]:
            Z_ij = state.Z[(i, j)]
            dual += _orientation(i, j) * (Z_ij[0] - Z_ij[1])
        return solve_factorized(factors[i], rhs0[i] - dual)

    for t in range(cfg.max_iters):
        previous = state.W

        # Primal phase
        if executor is not None:
            W = list(executor.map(update_node, range(g.size)))
        else:
            W = [update_node(i) for i in range(g.size)]

        if not all(np.all(np.isfinite(W_i)) for W_i in W):
            raise SolverError("PDMM state became non-finite", iteration=t)

        # Auxiliary phase
        for (i, j) in state.Y:
            signed = 2 * c * _orientation(i, j) * W[i]
            state.Y[(i, j)] = state.Z[(i, j)] + np.stack((signed, -signed)) - c * eps

        # Exchange phase, element-wise per constraint row
        for i, j in g.sorted_edges():
            Y_ij, Y_ji = state.Y[(i, j)], state.Y[(j, i)]
            active = Y_ij + Y_ji > 0
            state.Z[(i, j)] = np.where(active, Y_ji, -Y_ij)
            state.Z[(j, i)] = np.where(active, Y_ij, -Y_ji)

        state.W = W
        state.t = t + 1
        step = max(float(np.max(np.abs(W_i - P_i))) for W_i, P_i in zip(W, previous))

        if trace is not None:
            trace.append(t, constrained_objective(data, W, cfg.lam), max_violation(g, W), step)
        if t % LOG_EVERY == 0:
            logger.debug("pdmm iter=%d max_step=%.3g", t, step)

        if cfg.stop_tol is not None and t > 0 and step < cfg.stop_tol:
            converged = True
            break

    result = AlignmentMap(state.W)
    logger.info(
        "pdmm finished iters=%d max_violation=%.3g epsilon=%g",
        state.t,
        max_violation(g, state.W),
        eps,
    )
    return PdmmResult(W=result, iterations=state.t, converged=converged, trace=trace)
