"""Core primitives: language graphs, ridge alignment, file formats, metrics."""

from .align import AlignmentMap, NodeData, alignment_gradient, apply_alignment, ridge_align
from .graph import DistanceMatrix, LanguageGraph, build_graph, connected_components, load_distance_matrix
from .metrics import EvalResult, holdout_error, mean_cosine, rouge_l

__all__ = [
    "AlignmentMap",
    "NodeData",
    "alignment_gradient",
    "apply_alignment",
    "ridge_align",
    "DistanceMatrix",
    "LanguageGraph",
    "build_graph",
    "connected_components",
    "load_distance_matrix",
    "EvalResult",
    "holdout_error",
    "mean_cosine",
    "rouge_l",
]
