"""Evaluation metrics: cosine similarity, Rouge-L and held-out error."""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, NamedTuple, Sequence, Tuple

import numpy as np

from lago.core.align import AlignmentMap, NodeData, apply_alignment
from lago.errors import ShapeError

# Rows with a smaller l2 norm are treated as degenerate
DEGENERATE_NORM = 1e-12


class RougeScore(NamedTuple):
    precision: float
    recall: float
    f1: float


@dataclass
class EvalResult:
    """Evaluation of one alignment map on held-out data."""

    mean_cosine: float
    per_node_cosine: List[float]
    test_rel_error: List[float]
    objective: float
    max_violation: float
    degenerate_rows: int = 0
    rows_per_node: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EvalResult":
        return cls(
            mean_cosine=data["mean_cosine"],
            per_node_cosine=list(data["per_node_cosine"]),
            test_rel_error=list(data["test_rel_error"]),
            objective=data["objective"],
            max_violation=data["max_violation"],
            degenerate_rows=data.get("degenerate_rows", 0),
            rows_per_node=list(data.get("rows_per_node", [])),
        )


def row_cosines(E_hat: np.ndarray, E_ref: np.ndarray) -> Tuple[np.ndarray, int]:
    """
    Per-row cosine similarity.

    Rows where either vector has norm below 1e-12 score 0 and are counted.

    Returns:
        Tuple of (cosines, degenerate_row_count)
    """
    E_hat = np.asarray(E_hat, dtype=np.float64)
    E_ref = np.asarray(E_ref, dtype=np.float64)
    if E_hat.shape != E_ref.shape or E_hat.ndim != 2:
        raise ShapeError(f"Cannot compare shapes {E_hat.shape} and {E_ref.shape}")
    if E_hat.shape[0] < 1:
        raise ShapeError("At least one row is required")

    hat_norms = np.linalg.norm(E_hat, axis=1)
    ref_norms = np.linalg.norm(E_ref, axis=1)
    valid = (hat_norms >= DEGENERATE_NORM) & (ref_norms >= DEGENERATE_NORM)
    dots = np.sum(E_hat * E_ref, axis=1)
    cosines = np.zeros(E_hat.shape[0])
    cosines[valid] = dots[valid] / (hat_norms[valid] * ref_norms[valid])
    return np.clip(cosines, -1.0, 1.0), int(np.count_nonzero(~valid))


def mean_cosine(E_hat: np.ndarray, E_ref: np.ndarray) -> float:
    """Mean over rows of the cosine similarity between E_hat and E_ref."""
    cosines, _ = row_cosines(E_hat, E_ref)
    return float(np.mean(cosines))


def tokenize(text: str) -> List[str]:
    """Whitespace tokenization."""
    return text.split()


def lcs_length(a: Sequence[Any], b: Sequence[Any]) -> int:
    """Longest common subsequence length by dynamic programming."""
    if len(a) < len(b):
        a, b = b, a
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            if x == y:
                current[j] = previous[j - 1] + 1
            else:
                current[j] = max(previous[j], current[j - 1])
        previous = current
    return previous[-1]


def rouge_l(candidate: Sequence[Any], reference: Sequence[Any]) -> RougeScore:
    """
    Rouge-L precision, recall and F1 of a candidate against a reference.

    Both empty gives (1, 1, 1); exactly one empty gives (0, 0, 0).
    """
    if not candidate and not reference:
        return RougeScore(1.0, 1.0, 1.0)
    if not candidate or not reference:
        return RougeScore(0.0, 0.0, 0.0)

    lcs = lcs_length(candidate, reference)
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    if precision + recall == 0:
        return RougeScore(0.0, 0.0, 0.0)
    f1 = 2 * precision * recall / (precision + recall)
    return RougeScore(precision, recall, f1)


def corpus_rouge_l(candidates: Sequence[str], references: Sequence[str]) -> RougeScore:
    """Mean Rouge-L over aligned line pairs."""
    if len(candidates) != len(references):
        raise ShapeError(f"{len(candidates)} candidates but {len(references)} references")
    if not candidates:
        return RougeScore(0.0, 0.0, 0.0)
    scores = [rouge_l(tokenize(c), tokenize(r)) for c, r in zip(candidates, references)]
    return RougeScore(*(float(np.mean(column)) for column in zip(*scores)))


def holdout_error(test: Sequence[NodeData], W: AlignmentMap) -> List[float]:
    """Per-node ||E_V W - E_A||_F / max(||E_A||_F, 1e-12) on held-out data."""
    if len(test) != len(W):
        raise ShapeError(f"{len(test)} test nodes but {len(W)} maps")
    errors = []
    for d, W_i in zip(test, W):
        residual = apply_alignment(d.E_V, W_i) - d.E_A
        errors.append(float(np.linalg.norm(residual)) / max(float(np.linalg.norm(d.E_A)), 1e-12))
    return errors


def evaluate(
    test: Sequence[NodeData],
    W: AlignmentMap,
    objective: float = math.nan,
    max_violation: float = 0.0,
) -> EvalResult:
    """
    Score a solution on held-out data.

    mean_cosine averages over every evaluated row of every node, so nodes
    with more test rows weigh more.
    """
    if len(test) != len(W):
        raise ShapeError(f"{len(test)} test nodes but {len(W)} maps")

    all_cosines = []
    per_node = []
    degenerate = 0
    for d, W_i in zip(test, W):
        cosines, bad = row_cosines(apply_alignment(d.E_V, W_i), d.E_A)
        all_cosines.append(cosines)
        per_node.append(float(np.mean(cosines)))
        degenerate += bad

    return EvalResult(
        mean_cosine=float(np.mean(np.concatenate(all_cosines))),
        per_node_cosine=per_node,
        test_rel_error=holdout_error(test, W),
        objective=float(objective),
        max_violation=float(max_violation),
        degenerate_rows=degenerate,
        rows_per_node=[d.b for d in test],
    )
