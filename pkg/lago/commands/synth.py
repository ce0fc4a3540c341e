"""synth command: generate a synthetic instance and export it."""

import argparse
import logging
from pathlib import Path

from lago.config import settings
from lago.core.graph import build_graph, load_distance_matrix
from lago.errors import UsageError
from lago.services.experiment import TOPOLOGIES, stage
from lago.services.synth import SynthSpec, generate, save_instance

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("synth", help="Generate a synthetic instance", allow_abbrev=False)
    parser.add_argument("--nodes", type=int, default=4, help="Node count without --dist")
    parser.add_argument("--topology", choices=sorted(TOPOLOGIES), default="complete")
    parser.add_argument("--dist", type=Path, help="Distance matrix CSV naming the languages")
    parser.add_argument("--r", type=float, help="Edge threshold for --dist")
    parser.add_argument("--m", type=int, default=32)
    parser.add_argument("--n", type=int, default=16)
    parser.add_argument("--b-train", type=int, default=10)
    parser.add_argument("--b-test", type=int, default=200)
    parser.add_argument("--delta", type=float, default=0.05)
    parser.add_argument("--sigma", type=float, default=0.1)
    parser.add_argument("--deviation-mode", choices=["shared", "distance"], default="shared")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--output", type=Path, help="Instance directory (default: <output dir>/instance)")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """Generate, export and print the manifest path."""
    timings = {}
    with stage("load", timings):
        if args.dist is not None:
            if args.r is None:
                raise UsageError("--r is required with --dist")
            graph = build_graph(load_distance_matrix(args.dist), args.r)
        else:
            graph = TOPOLOGIES[args.topology](f"L{i}" for i in range(args.nodes))

    with stage("synth", timings):
        spec = SynthSpec(
            n_nodes=graph.size,
            m=args.m,
            n=args.n,
            b_train=args.b_train,
            b_test=args.b_test,
            delta=args.delta,
            sigma=args.sigma,
            seed=args.seed,
            graph=graph,
            mode=args.deviation_mode,
        )
        instance = generate(spec)

    with stage("report", timings):
        manifest = save_instance(instance, args.output or Path(settings.output_dir) / "instance")

    print(manifest)
    logger.info("synth done seed=%d nodes=%d seconds=%.3f", args.seed, graph.size, timings["synth"])
    return 0
