"""Language distance matrices and thresholded similarity graphs."""

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from lago.errors import DataError

logger = logging.getLogger(__name__)

# Absolute tolerance for the symmetry check on ingested matrices
SYMMETRY_TOL = 1e-9

Edge = Tuple[int, int]


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric language dissimilarity matrix with language labels."""

    labels: Tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "values", values)
        values.setflags(write=False)
        _validate_distances(self.labels, values)

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        """Position of a language code."""
        try:
            return self.labels.index(label)
        except ValueError:
            raise DataError(f"Unknown language label: {label}") from None


@dataclass(frozen=True)
class LanguageGraph:
    """Undirected language graph; edges are stored as (i, j) with i < j."""

    labels: Tuple[str, ...]
    edges: FrozenSet[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        n = len(self.labels)
        normalized = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise DataError(f"Self-loop on node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise DataError(f"Edge ({i}, {j}) references a node outside 0..{n - 1}")
            normalized.add((min(i, j), max(i, j)))
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "edges", frozenset(normalized))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def degrees(self) -> Tuple[int, ...]:
        deg = [0] * self.size
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return tuple(deg)

    def sorted_edges(self) -> List[Edge]:
        return sorted(self.edges)

    def neighbors(self, i: int) -> List[int]:
        """Sorted neighbor list of node i."""
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)


def _validate_distances(labels: Sequence[str], values: np.ndarray) -> None:
    """Check the DistanceMatrix invariants."""
    n = len(labels)
    if values.ndim != 2 or values.shape != (n, n):
        raise DataError(f"Distance matrix must be {n}x{n}, got shape {values.shape}")
    if len(set(labels)) != n:
        raise DataError("Duplicate language labels")
    if not np.all(np.isfinite(values)):
        raise DataError("Distance matrix contains non-finite entries")
    if np.any(values < 0):
        raise DataError("Distance matrix contains negative entries")
    if not np.array_equal(values, values.T):
        raise DataError("Distance matrix is not symmetric")
    if np.any(np.diag(values) != 0):
        raise DataError("Distance matrix diagonal must be zero")


def load_distance_matrix(source: Union[str, Path, io.TextIOBase]) -> DistanceMatrix:
    """
    Parse a distance matrix from CSV.

    The first row holds the language codes (an optional empty leading cell is
    accepted), each following row is ``code, v1, ..., vN``.

    Args:
        source: CSV text, a path to a CSV file, or an open text stream

    Returns:
        Validated, symmetrized DistanceMatrix

    Raises:
        DataError: If the matrix is not square, asymmetric beyond 1e-9,
            contains negative or non-finite entries, or has duplicate labels
    """
    if isinstance(source, Path):
        try:
            text = source.read_text(encoding="utf-8")
        except OSError as e:
            raise DataError(f"Cannot read distance matrix {source}: {e}") from e
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()

    rows = [row for row in csv.reader(io.StringIO(text)) if any(cell.strip() for cell in row)]
    if not rows:
        raise DataError("Empty distance matrix")

    # The header may or may not carry an empty corner cell
    header = [cell.strip() for cell in rows[0]]
    body = rows[1:]
    if header and header[0] == "" and len(header) == len(body) + 1:
        header = header[1:]

    # A headerless single row ("eng,0") is the degenerate 1x1 case
    if not body and len(header) == 2:
        body = [header]
        header = [header[0]]

    n = len(header)
    if len(body) != n:
        raise DataError(f"Distance matrix is not square: {n} labels, {len(body)} rows")

    values = np.empty((n, n), dtype=np.float64)
    for r, row in enumerate(body):
        cells = [cell.strip() for cell in row]
        if len(cells) != n + 1:
            raise DataError(f"Row {r + 1} has {len(cells) - 1} values, expected {n}")
        if cells[0] != header[r]:
            raise DataError(f"Row label {cells[0]!r} does not match column label {header[r]!r}")
        try:
            values[r] = [float(cell) for cell in cells[1:]]
        except ValueError as e:
            raise DataError(f"Row {r + 1}: {e}") from e

    if not np.all(np.isfinite(values)):
        raise DataError("Distance matrix contains non-finite entries")
    if np.any(values < 0):
        raise DataError("Distance matrix contains negative entries")
    asym = float(np.max(np.abs(values - values.T))) if n else 0.0
    if asym > SYMMETRY_TOL:
        raise DataError(f"Distance matrix is asymmetric by {asym:.3g} (tolerance {SYMMETRY_TOL:g})")

    values = (values + values.T) / 2
    return DistanceMatrix(labels=tuple(header), values=values)


def build_graph(D: DistanceMatrix, r: float) -> LanguageGraph:
    """
    Threshold a distance matrix into a language graph.

    An edge joins i and j (i != j) iff ``D[i][j] < r``. Equality gives no
    edge, i.e. sign(0) = +1 in the adjacency formula.

    Args:
        D: Validated distance matrix
        r: Finite threshold

    Returns:
        LanguageGraph on D's labels
    """
    if not math.isfinite(r):
        raise DataError(f"Threshold must be finite, got {r}")
    adjacency = (1 - np.where(D.values - r < 0, -1.0, 1.0)) / 2
    np.fill_diagonal(adjacency, 0)
    ii, jj = np.nonzero(np.triu(adjacency, k=1))
    graph = LanguageGraph(labels=D.labels, edges=frozenset(zip(ii.tolist(), jj.tolist())))
    logger.debug("graph built r=%g nodes=%d edges=%d", r, graph.size, len(graph.edges))
    return graph


def adjacency_matrix(g: LanguageGraph) -> np.ndarray:
    """Symmetric 0/1 adjacency view with zero diagonal."""
    A = np.zeros((g.size, g.size), dtype=np.int64)
    for i, j in g.edges:
        A[i, j] = A[j, i] = 1
    return A


def connected_components(g: LanguageGraph) -> List[List[int]]:
    """
    Partition the nodes into connected components.

    Returns:
        Components as sorted index lists, ordered by their smallest node
    """
    if g.size == 0:
        return []
    _, labels = csgraph.connected_components(sparse.csr_matrix(adjacency_matrix(g)), directed=False)
    components: Dict[int, List[int]] = {}
    for node, label in enumerate(labels.tolist()):
        components.setdefault(label, []).append(node)
    return sorted(components.values(), key=lambda c: c[0])


def hop_distances(g: LanguageGraph, source: int) -> List[float]:
    """Unweighted shortest-path hop counts from source; unreachable nodes get inf."""
    dist = csgraph.shortest_path(
        sparse.csr_matrix(adjacency_matrix(g)), directed=False, unweighted=True, indices=source
    )
    return dist.tolist()


def complete_graph(labels: Iterable[str]) -> LanguageGraph:
    labels = tuple(labels)
    n = len(labels)
    return LanguageGraph(labels=labels, edges=frozenset((i, j) for i in range(n) for j in range(i + 1, n)))


def path_graph(labels: Iterable[str]) -> LanguageGraph:
    labels = tuple(labels)
    return LanguageGraph(labels=labels, edges=frozenset((i, i + 1) for i in range(len(labels) - 1)))


def empty_graph(labels: Iterable[str]) -> LanguageGraph:
    return LanguageGraph(labels=tuple(labels))


def graph_to_dict(g: LanguageGraph) -> Dict[str, Any]:
    """JSON view: ``{labels: [...], edges: [[i, j], ...]}``."""
    return {
        "labels": list(g.labels),
        "edges": [[i, j] for i, j in g.sorted_edges()],
    }


def graph_from_dict(data: Dict[str, Any]) -> LanguageGraph:
    try:
        return LanguageGraph(
            labels=tuple(data["labels"]),
            edges=frozenset((int(i), int(j)) for i, j in data["edges"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"Invalid graph JSON: {e}") from e


def format_edges(g: LanguageGraph) -> str:
    """Human-readable edge list, one ``a -- b`` per line."""
    if not g.edges:
        return "(no edges)"
    return "\n".join(f"{g.labels[i]} -- {g.labels[j]}" for i, j in g.sorted_edges())
