"""Reference solvers for small instances.

These solvers share no update code with the distributed solvers: scalar
problems are solved exactly by enumerating active sets, matrix problems by
quadratic-penalty continuation with L-BFGS.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from lago.core.align import AlignmentMap, NodeData, check_common_shape
from lago.core.graph import LanguageGraph
from lago.errors import DataError, OracleError

logger = logging.getLogger(__name__)

MAX_INEQ_EDGES = 6
MAX_TV_NODES = 3
KKT_TOL = 1e-10


@dataclass
class ScalarInstance:
    """m = n = 1 instance: per-node paired scalar samples (e_V, e_A)."""

    e_V: List[np.ndarray]
    e_A: List[np.ndarray]
    graph: LanguageGraph
    lam: float = 0.01
    epsilon: Optional[float] = None
    eta: Optional[float] = None

    def __post_init__(self):
        self.e_V = [np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in self.e_V]
        self.e_A = [np.atleast_1d(np.asarray(a, dtype=np.float64)) for a in self.e_A]
        if not self.e_V:
            raise DataError("A scalar instance needs at least one node")
        if len(self.e_V) != len(self.e_A) or len(self.e_V) != self.graph.size:
            raise DataError("Node count differs between samples and graph")
        for i, (v, a) in enumerate(zip(self.e_V, self.e_A)):
            if v.shape != a.shape or v.ndim != 1 or v.size < 1:
                raise DataError(f"Node {i}: need b >= 1 paired samples")

    @property
    def curvature(self) -> np.ndarray:
        """a_i = sum e_V^2 + lambda."""
        return np.array([float(v @ v) + self.lam for v in self.e_V])

    @property
    def linear(self) -> np.ndarray:
        """g_i = sum e_V e_A."""
        return np.array([float(v @ a) for v, a in zip(self.e_V, self.e_A)])

    @property
    def constant(self) -> float:
        return 0.5 * sum(float(a @ a) for a in self.e_A)

    def smooth_objective(self, w: np.ndarray) -> float:
        w = np.asarray(w, dtype=np.float64)
        return float(0.5 * np.sum(self.curvature * w * w) - self.linear @ w + self.constant)

    def tv_objective(self, w: np.ndarray) -> float:
        eta = self.eta or 0.0
        tv = sum(abs(float(w[i] - w[j])) for i, j in self.graph.sorted_edges())
        return self.smooth_objective(w) + eta * tv

    def to_node_data(self) -> List[NodeData]:
        return [
            NodeData(node=i, E_V=v.reshape(-1, 1), E_A=a.reshape(-1, 1))
            for i, (v, a) in enumerate(zip(self.e_V, self.e_A))
        ]


@dataclass
class ScalarSolution:
    w: np.ndarray
    objective: float
    pattern: Tuple[int, ...] = ()
    multipliers: Dict[Tuple[int, int], float] = field(default_factory=dict)


def _solve_pattern(
    H: np.ndarray, g: np.ndarray, rows: List[np.ndarray], rhs: List[float]
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Minimize 0.5 w'Hw - g'w subject to C w = h; None if C is rank deficient."""
    N = len(g)
    if not rows:
        return np.linalg.solve(H, g), np.zeros(0)
    C = np.array(rows)
    if np.linalg.matrix_rank(C) < len(rows):
        return None
    k = len(rows)
    kkt = np.block([[H, C.T], [C, np.zeros((k, k))]])
    sol = np.linalg.solve(kkt, np.concatenate([g, rhs]))
    return sol[:N], sol[N:]


def scalar_ineq_oracle(inst: ScalarInstance) -> ScalarSolution:
    """
    Exact minimizer of the scalar inequality-constrained problem.

    Enumerates 3^|E| activity patterns (inactive, tight at +eps, tight at
    -eps per edge), solves each equality-constrained quadratic through its
    KKT system and keeps the best pattern that is feasible with nonnegative
    multipliers (both to 1e-10).

    Raises:
        OracleError: If the graph has more than 6 edges or no pattern qualifies
    """
    edges = inst.graph.sorted_edges()
    if len(edges) > MAX_INEQ_EDGES:
        raise OracleError(f"Enumeration bound exceeded: {len(edges)} edges > {MAX_INEQ_EDGES}")
    if inst.epsilon is None:
        raise DataError("scalar_ineq_oracle needs epsilon")
    eps = float(inst.epsilon)
    N = inst.graph.size
    H = np.diag(inst.curvature)
    g = inst.linear

    best: Optional[ScalarSolution] = None
    for pattern in itertools.product((0, 1, -1), repeat=len(edges)):
        rows, rhs, active = [], [], []
        for (i, j), state in zip(edges, pattern):
            if state == 0:
                continue
            # state * (w_i - w_j) <= eps is tight
            row = np.zeros(N)
            row[i], row[j] = state, -state
            rows.append(row)
            rhs.append(eps)
            active.append((i, j))

        solved = _solve_pattern(H, g, rows, rhs)
        if solved is None:
            continue
        w, mu = solved

        # Feasibility of every constraint
        if any(abs(w[i] - w[j]) > eps + KKT_TOL for i, j in edges):
            continue
        # Dual feasibility
        if np.any(mu < -KKT_TOL):
            continue

        objective = inst.smooth_objective(w)
        if best is None or objective < best.objective:
            best = ScalarSolution(
                w=w,
                objective=objective,
                pattern=tuple(pattern),
                multipliers=dict(zip(active, (float(x) for x in mu))),
            )

    if best is None:
        raise OracleError("No activity pattern satisfied the KKT conditions")
    return best


def _coordinate_minimize(inst: ScalarInstance, w: np.ndarray, i: int) -> float:
    """Exact minimizer over w_i of the TV objective, other nodes fixed."""
    a = inst.curvature[i]
    g = inst.linear[i]
    eta = inst.eta or 0.0
    anchors = sorted(float(w[j]) for j in inst.graph.neighbors(i))

    def local(x: float) -> float:
        return 0.5 * a * x * x - g * x + eta * sum(abs(x - y) for y in anchors)

    # Stationary points of each quadratic piece plus the kinks
    candidates = list(anchors)
    bounds = [-math.inf] + anchors + [math.inf]
    for k in range(len(bounds) - 1):
        slope = eta * (k - (len(anchors) - k))
        x = (g - slope) / a
        if bounds[k] <= x <= bounds[k + 1]:
            candidates.append(x)
    return min(candidates, key=local)


def _golden_refine(inst: ScalarInstance, w: np.ndarray, radius: float) -> np.ndarray:
    """Golden-section sweeps over each coordinate and each fused edge direction."""
    w = np.array(w, dtype=np.float64)
    directions = [np.eye(len(w))[i] for i in range(len(w))]
    for i, j in inst.graph.sorted_edges():
        d = np.zeros(len(w))
        d[i] = d[j] = 1.0
        directions.append(d / math.sqrt(2))
    directions.append(np.ones(len(w)) / math.sqrt(len(w)))

    for _ in range(50):
        start = inst.tv_objective(w)
        for d in directions:
            res = minimize_scalar(
                lambda s: inst.tv_objective(w + s * d),
                bracket=(0.0, radius),
                method="golden",
            )
            if res.fun < inst.tv_objective(w):
                w = w + res.x * d
        if start - inst.tv_objective(w) < 1e-14:
            break
    return w


def scalar_tv_oracle(inst: ScalarInstance, grid_step: float = 1e-4, tol: float = 1e-6) -> ScalarSolution:
    """
    Minimizer of the scalar TV objective, each edge counted once.

    Coordinate-wise exact minimization is iterated to a fixed point and
    cross-checked against a dense grid refined by golden-section search.
    The grid uses ``grid_step`` on each axis for a single node and is
    coarsened to at most about 10^6 points for two or three nodes before
    refinement.

    Raises:
        OracleError: If more than 3 nodes are given, or the two searches
            disagree by more than ``tol``
    """
    N = inst.graph.size
    if N > MAX_TV_NODES:
        raise OracleError(f"Size bound exceeded: {N} nodes > {MAX_TV_NODES}")
    if inst.eta is None:
        raise DataError("scalar_tv_oracle needs eta")

    # Coordinate descent from the decoupled ridge solution
    w = inst.linear / inst.curvature
    for _ in range(10_000):
        previous = w.copy()
        for i in range(N):
            w[i] = _coordinate_minimize(inst, w, i)
        if np.max(np.abs(w - previous)) < 1e-15:
            break
    w = _golden_refine(inst, w, radius=1.0)

    # Dense grid over a box holding every minimizer
    ridge = inst.linear / inst.curvature
    lo, hi = float(np.min(ridge)) - 0.1, float(np.max(ridge)) + 0.1
    points_per_axis = int(min((hi - lo) / grid_step, 10 ** (6 / N))) + 1
    axis = np.linspace(lo, hi, points_per_axis)
    grids = np.meshgrid(*([axis] * N), indexing="ij")
    candidates = np.stack([grid.ravel() for grid in grids], axis=1)
    values = 0.5 * np.sum(inst.curvature * candidates**2, axis=1) - candidates @ inst.linear + inst.constant
    for i, j in inst.graph.sorted_edges():
        values = values + inst.eta * np.abs(candidates[:, i] - candidates[:, j])
    start = candidates[int(np.argmin(values))]
    refined = _golden_refine(inst, start, radius=(hi - lo) / points_per_axis * 4)

    f_cd = inst.tv_objective(w)
    f_grid = inst.tv_objective(refined)
    if f_grid < f_cd - tol:
        raise OracleError(f"TV oracle cross-check failed: grid {f_grid:.10g} < descent {f_cd:.10g}")
    if f_grid < f_cd:
        w, f_cd = refined, f_grid
    return ScalarSolution(w=w, objective=f_cd)


@dataclass
class PenaltyResult:
    W: AlignmentMap
    objective: float
    max_violation: float
    converged: bool
    stages: int


def penalty_oracle(
    g: LanguageGraph,
    data: Sequence[NodeData],
    lam: float,
    epsilon: float,
    mu0: float = 1.0,
    growth: float = 10.0,
    stages: int = 6,
    max_iters: int = 20_000,
) -> PenaltyResult:
    """
    Approximate the constrained optimum by quadratic-penalty continuation.

    Minimizes ``sum_i ridge_i(W_i) + mu * sum_edges sum_entries
    max(0, |W_i - W_j| - eps)^2`` with L-BFGS, multiplying mu by ``growth``
    over ``stages`` stages and warm-starting each stage. Non-convergence is
    logged and reported, not raised.
    """
    if g.size > 4:
        raise OracleError(f"Penalty oracle is limited to 4 nodes, got {g.size}")
    if len(data) != g.size:
        raise DataError(f"Graph has {g.size} nodes but {len(data)} data blocks were given")
    m, n = check_common_shape(data)
    N = g.size
    edges = g.sorted_edges()
    grams = [d.E_V.T @ d.E_V + lam * np.eye(m) for d in data]
    cross = [d.E_V.T @ d.E_A for d in data]
    consts = [0.5 * float(np.sum(d.E_A * d.E_A)) for d in data]

    def smooth(W: np.ndarray) -> Tuple[float, np.ndarray]:
        value = 0.0
        grad = np.empty_like(W)
        for i in range(N):
            KW = grams[i] @ W[i]
            value += 0.5 * float(np.sum(W[i] * KW)) - float(np.sum(W[i] * cross[i])) + consts[i]
            grad[i] = KW - cross[i]
        return value, grad

    def penalized(x: np.ndarray, mu: float) -> Tuple[float, np.ndarray]:
        W = x.reshape(N, m, n)
        value, grad = smooth(W)
        if math.isfinite(epsilon):
            for i, j in edges:
                diff = W[i] - W[j]
                excess = np.maximum(np.abs(diff) - epsilon, 0.0)
                value += mu * float(np.sum(excess * excess))
                push = 2 * mu * excess * np.sign(diff)
                grad[i] += push
                grad[j] -= push
        return value, grad.ravel()

    x = np.zeros(N * m * n)
    converged = True
    mu = mu0
    for stage in range(stages):
        res = minimize(
            penalized,
            x,
            args=(mu,),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": max_iters, "gtol": 1e-12, "ftol": 1e-15},
        )
        x = res.x
        if not res.success:
            converged = False
            logger.warning("penalty oracle stage=%d mu=%g did not converge: %s", stage, mu, res.message)
        mu *= growth

    W = x.reshape(N, m, n)
    violation = max((float(np.max(np.abs(W[i] - W[j]))) for i, j in edges), default=0.0)
    return PenaltyResult(
        W=AlignmentMap(list(W)),
        objective=smooth(W)[0],
        max_violation=violation,
        converged=converged,
        stages=stages,
    )


def random_scalar_instance(
    rng: np.random.Generator,
    graph: LanguageGraph,
    b: int = 3,
    lam: float = 0.01,
    epsilon: Optional[float] = None,
    eta: Optional[float] = None,
    spread: float = 1.0,
) -> ScalarInstance:
    """
    Random scalar instance; e_V in [1, 2] keeps every node well conditioned
    and ``spread`` sets the distance between the per-node ridge solutions.
    """
    e_V, e_A = [], []
    for _ in range(graph.size):
        v = rng.uniform(1.0, 2.0, b)
        slope = rng.normal(0.0, spread)
        e_V.append(v)
        e_A.append(slope * v + 0.05 * rng.normal(size=b))
    return ScalarInstance(e_V=e_V, e_A=e_A, graph=graph, lam=lam, epsilon=epsilon, eta=eta)
