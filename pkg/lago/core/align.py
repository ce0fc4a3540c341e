"""Closed-form ridge alignment between victim and attack embedding spaces."""

import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from lago.errors import DataError, RankDeficiencyError, ShapeError

logger = logging.getLogger(__name__)

# Relative tolerance of the first-order optimality certificate
OPTIMALITY_RTOL = 1e-8


@dataclass(frozen=True)
class NodeData:
    """Paired embeddings of one language: E_V is b x m, E_A is b x n."""

    node: int
    E_V: np.ndarray
    E_A: np.ndarray

    def __post_init__(self):
        E_V = np.array(self.E_V, dtype=np.float64, ndmin=2)
        E_A = np.array(self.E_A, dtype=np.float64, ndmin=2)
        if E_V.ndim != 2 or E_A.ndim != 2:
            raise ShapeError("Embedding matrices must be two-dimensional")
        if E_V.shape[0] != E_A.shape[0]:
            raise ShapeError(
                f"Node {self.node}: E_V has {E_V.shape[0]} rows but E_A has {E_A.shape[0]}"
            )
        if E_V.shape[0] < 1:
            raise DataError(f"Node {self.node}: at least one sample is required")
        if not (np.all(np.isfinite(E_V)) and np.all(np.isfinite(E_A))):
            raise DataError(f"Node {self.node}: embeddings contain non-finite entries")
        E_V.setflags(write=False)
        E_A.setflags(write=False)
        object.__setattr__(self, "E_V", E_V)
        object.__setattr__(self, "E_A", E_A)

    @property
    def b(self) -> int:
        return self.E_V.shape[0]

    @property
    def m(self) -> int:
        return self.E_V.shape[1]

    @property
    def n(self) -> int:
        return self.E_A.shape[1]


class AlignmentMap:
    """Per-node m x n transforms sharing one shape."""

    def __init__(self, maps: Iterable[np.ndarray]):
        arrays = [np.array(W, dtype=np.float64, ndmin=2) for W in maps]
        if not arrays:
            raise DataError("AlignmentMap needs at least one node")
        shape = arrays[0].shape
        for i, W in enumerate(arrays):
            if W.ndim != 2 or W.shape != shape:
                raise ShapeError(f"Node {i}: map shape {W.shape} differs from {shape}")
            if not np.all(np.isfinite(W)):
                raise DataError(f"Node {i}: map contains non-finite entries")
            W.setflags(write=False)
        self._maps: Tuple[np.ndarray, ...] = tuple(arrays)

    def __len__(self) -> int:
        return len(self._maps)

    def __getitem__(self, i: int) -> np.ndarray:
        return self._maps[i]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self._maps)

    @property
    def shape(self) -> Tuple[int, int]:
        return self._maps[0].shape

    def stack(self) -> np.ndarray:
        """All maps as one (N, m, n) array."""
        return np.stack(self._maps)

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(W)) for W in self._maps))


def check_common_shape(data: Sequence[NodeData]) -> Tuple[int, int]:
    """Shared (m, n) of per-node data."""
    if not data:
        raise DataError("No node data supplied")
    m, n = data[0].m, data[0].n
    for d in data:
        if (d.m, d.n) != (m, n):
            raise ShapeError(f"Node {d.node}: dimensions {(d.m, d.n)} differ from {(m, n)}")
    return m, n


def normalize_rows(E: np.ndarray) -> np.ndarray:
    """Scale rows to unit l2 norm; zero rows stay zero."""
    E = np.asarray(E, dtype=np.float64)
    norms = np.linalg.norm(E, axis=1, keepdims=True)
    return np.divide(E, norms, out=np.zeros_like(E), where=norms > 0)


def factorize(E_V: np.ndarray, shift: float):
    """
    Cholesky factor of E_V^T E_V + shift * I.

    Raises:
        RankDeficiencyError: If the system matrix is not positive definite
    """
    K = E_V.T @ E_V
    K[np.diag_indices_from(K)] += shift
    try:
        return cho_factor(K, lower=True, check_finite=False)
    except LinAlgError as e:
        raise RankDeficiencyError(
            "Normal equations are singular (rank-deficient E_V); use lambda > 0"
        ) from e


def solve_factorized(factor, rhs: np.ndarray) -> np.ndarray:
    return cho_solve(factor, rhs, check_finite=False)


def optimality_residual(d: NodeData, W: np.ndarray, lam: float) -> float:
    """Frobenius norm of the gradient of the local ridge objective at W."""
    return float(np.linalg.norm(alignment_gradient(d, W, lam)))


def optimality_tolerance(d: NodeData) -> float:
    return OPTIMALITY_RTOL * (1.0 + float(np.linalg.norm(d.E_V.T @ d.E_A)))


def ridge_align(d: NodeData, lam: float) -> np.ndarray:
    """
    Solve the ridge alignment problem for one node.

    Minimizes ``0.5 * ||E_A - E_V W||_F^2 + (lam / 2) * ||W||_F^2`` through the
    normal equations ``(E_V^T E_V + lam I) W = E_V^T E_A``.

    Args:
        d: Paired embeddings of the node
        lam: Ridge weight, nonnegative

    Returns:
        The m x n alignment matrix

    Raises:
        RankDeficiencyError: If lam == 0 and E_V does not have full column rank
    """
    if lam < 0:
        raise DataError(f"lambda must be nonnegative, got {lam}")
    if lam == 0 and d.b < d.m:
        raise RankDeficiencyError(
            f"Node {d.node}: {d.b} samples cannot determine {d.m} rows of W without "
            "regularization; use lambda > 0"
        )

    factor = factorize(d.E_V, lam)
    W = solve_factorized(factor, d.E_V.T @ d.E_A)

    residual = optimality_residual(d, W, lam)
    if not np.all(np.isfinite(W)) or residual > optimality_tolerance(d):
        if lam == 0:
            raise RankDeficiencyError(
                f"Node {d.node}: E_V^T E_V is numerically singular; use lambda > 0"
            )
        logger.warning("ridge certificate loose node=%d residual=%.3g", d.node, residual)
    return W


def apply_alignment(E_V: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Map victim embeddings into the attack space: E_V @ W."""
    E_V = np.asarray(E_V, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if E_V.ndim != 2 or W.ndim != 2 or E_V.shape[1] != W.shape[0]:
        raise ShapeError(f"Cannot apply {W.shape} map to embeddings of shape {E_V.shape}")
    return E_V @ W


def alignment_gradient(d: NodeData, W: np.ndarray, lam: float) -> np.ndarray:
    """Gradient -E_V^T (E_A - E_V W) + lam W of the local ridge objective."""
    W = np.asarray(W, dtype=np.float64)
    if W.shape != (d.m, d.n):
        raise ShapeError(f"Map shape {W.shape} does not match node data {(d.m, d.n)}")
    return -d.E_V.T @ (d.E_A - d.E_V @ W) + lam * W


def ridge_objective(d: NodeData, W: np.ndarray, lam: float) -> float:
    residual = d.E_A - d.E_V @ W
    return 0.5 * float(np.sum(residual * residual)) + 0.5 * lam * float(np.sum(W * W))


def pooled_ridge_align(data: Sequence[NodeData], lam: float) -> np.ndarray:
    """
    Single transform fit on all nodes' stacked data.

    Solves ``(sum_i E_Vi^T E_Vi + N lam I) W = sum_i E_Vi^T E_Ai``, the
    consensus limit of the constrained problem on a connected graph.
    """
    m, _ = check_common_shape(data)
    K = sum(d.E_V.T @ d.E_V for d in data)
    rhs = sum(d.E_V.T @ d.E_A for d in data)
    K = K + len(data) * lam * np.eye(m)
    try:
        factor = cho_factor(K, lower=True)
    except LinAlgError as e:
        raise RankDeficiencyError("Pooled normal equations are singular; use lambda > 0") from e
    return cho_solve(factor, rhs)


def ridge_align_all(data: Sequence[NodeData], lam: float) -> AlignmentMap:
    """Independent ridge solution per node."""
    check_common_shape(data)
    return AlignmentMap(ridge_align(d, lam) for d in data)
