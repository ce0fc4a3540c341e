"""graph command: threshold a distance matrix into a language graph."""

import argparse
import logging
from pathlib import Path

from lago.config import settings
from lago.core.graph import build_graph, format_edges, graph_to_dict, load_distance_matrix
from lago.services.experiment import stage
from lago.services.storage import dumps_json

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "graph", help="Build a language graph from a distance matrix", allow_abbrev=False
    )
    parser.add_argument("--dist", type=Path, required=True, help="Distance matrix CSV")
    parser.add_argument("--r", type=float, required=True, help="Edge threshold; D[i][j] < r joins i and j")
    parser.add_argument("--output", type=Path, help="Graph JSON path (default: <output dir>/graph.json)")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """Write the graph JSON and print the edge list."""
    timings = {}
    with stage("load", timings):
        D = load_distance_matrix(args.dist)
    with stage("graph", timings):
        g = build_graph(D, args.r)

    output = args.output or Path(settings.output_dir) / "graph.json"
    with stage("report", timings):
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(dumps_json(graph_to_dict(g)), encoding="utf-8")

    print(format_edges(g))
    logger.info("graph written path=%s edges=%d", output, len(g.edges))
    return 0
