"""Experiment flags shared by the solve and sweep commands."""

import argparse
from pathlib import Path
from typing import Any, Dict

# (flag, config field, argparse keyword arguments)
EXPERIMENT_FLAGS = (
    ("--name", "name", {"help": "Experiment name"}),
    ("--dist", "distance_matrix", {"type": Path, "help": "Distance matrix CSV"}),
    ("--r", "threshold", {"type": float, "help": "Edge threshold for --dist"}),
    ("--topology", "topology", {"choices": ["complete", "path", "empty"], "help": "Synthetic graph without --dist"}),
    ("--instance", "instance", {"type": Path, "help": "manifest.json of an exported instance"}),
    ("--nodes", "n_nodes", {"type": int, "help": "Synthetic node count"}),
    ("--m", "m", {"type": int, "help": "Victim embedding dimension"}),
    ("--n", "n", {"type": int, "help": "Attack embedding dimension"}),
    ("--b-train", "b_train", {"type": int, "help": "Training samples per node"}),
    ("--b-test", "b_test", {"type": int, "help": "Held-out samples per node"}),
    ("--delta", "delta", {"type": float, "help": "Cross-node deviation of true transforms"}),
    ("--sigma", "sigma", {"type": float, "help": "Observation noise"}),
    ("--deviation-mode", "deviation_mode", {"choices": ["shared", "distance"]}),
    ("--method", "method", {"choices": ["closed", "pdmm", "tv"]}),
    ("--c", "c", {"type": float, "help": "PDMM convergence parameter"}),
    ("--lambda", "lam", {"type": float, "help": "Ridge weight"}),
    ("--epsilon", "epsilon", {"type": float, "help": "Max entry-wise deviation across edges (inf allowed)"}),
    ("--eta", "eta", {"type": float, "help": "TV penalty weight"}),
    ("--alpha", "alpha", {"type": float, "help": "TV base step size"}),
    ("--max-iters", "max_iters", {"type": int}),
    ("--stop-tol", "stop_tol", {"type": float, "help": "PDMM early stop on max iterate change"}),
    ("--seeds", "seeds", {"type": int, "nargs": "+"}),
    ("--noise", "noise", {"choices": ["none", "gaussian", "laplace"], "help": "Defense noise on victim embeddings"}),
    ("--noise-scale", "noise_scale", {"type": float}),
    ("--output-dir", "output_dir", {"type": Path, "help": "Defaults to LAGO_OUTPUT_DIR"}),
    ("--workers", "workers", {"type": int, "help": "Seeds run concurrently"}),
)

SWITCHES = (
    ("--warm-start", "warm_start", "Start TV from the independent ridge solutions"),
    ("--normalize", "normalize", "Scale embedding rows to unit norm"),
    ("--trace", "record_trace", "Write per-iteration solver traces"),
    ("--save-maps", "save_maps", "Write the solved maps"),
)


def add_experiment_options(parser: argparse.ArgumentParser) -> None:
    """Register the config file option and every override flag."""
    parser.add_argument("--config", type=Path, help="JSON experiment config; flags override it")
    for flag, dest, kwargs in EXPERIMENT_FLAGS:
        parser.add_argument(flag, dest=dest, default=None, **kwargs)
    for flag, dest, help_text in SWITCHES:
        parser.add_argument(flag, dest=dest, action="store_const", const=True, default=None, help=help_text)


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Flag values keyed by config field; unset flags are None."""
    fields = [dest for _, dest, _ in EXPERIMENT_FLAGS] + [dest for _, dest, _ in SWITCHES]
    return {dest: getattr(args, dest) for dest in fields}
