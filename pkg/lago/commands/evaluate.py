"""eval command: score saved maps on an instance, or Rouge-L on two text files."""

import argparse
import logging
from pathlib import Path
from typing import List

from lago.config import settings
from lago.core.align import AlignmentMap
from lago.core.metrics import corpus_rouge_l, evaluate
from lago.errors import DataError, UsageError
from lago.services.experiment import stage
from lago.services.storage import dumps_json, load_maps
from lago.services.synth import load_instance
from lago.solvers.pdmm import constrained_objective, max_violation

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="Evaluate alignment maps or text outputs", allow_abbrev=False)
    maps = parser.add_argument_group("alignment maps")
    maps.add_argument("--instance", type=Path, help="manifest.json of an exported instance")
    maps.add_argument("--maps", type=Path, help="Directory of W_<label>.lagomap files")
    maps.add_argument("--lambda", dest="lam", type=float, default=settings.lam, help="Ridge weight of the objective")
    text = parser.add_argument_group("text")
    text.add_argument("--candidates", type=Path, help="Decoded texts, one per line")
    text.add_argument("--references", type=Path, help="Reference texts, one per line")
    parser.add_argument("--output", type=Path, help="Also write the JSON result here")
    parser.set_defaults(func=run)


def _read_lines(path: Path) -> List[str]:
    try:
        return path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"Cannot read {path}: {e}") from e


def evaluate_maps(args: argparse.Namespace) -> dict:
    with stage("load", {}):
        instance = load_instance(args.instance)
        W = AlignmentMap(load_maps(args.maps, instance.labels))
    with stage("eval", {}):
        result = evaluate(
            instance.test,
            W,
            objective=constrained_objective(instance.train, W, args.lam),
            max_violation=max_violation(instance.graph, W),
        )
    return {"labels": instance.labels, **result.to_dict()}


def evaluate_text(args: argparse.Namespace) -> dict:
    with stage("load", {}):
        candidates = _read_lines(args.candidates)
        references = _read_lines(args.references)
    with stage("eval", {}):
        score = corpus_rouge_l(candidates, references)
    return {
        "pairs": len(candidates),
        "precision": score.precision,
        "recall": score.recall,
        "f1": score.f1,
        "rouge_l_f1_x100": 100 * score.f1,
    }


def run(args: argparse.Namespace) -> int:
    map_mode = args.instance is not None or args.maps is not None
    text_mode = args.candidates is not None or args.references is not None
    if map_mode == text_mode:
        raise UsageError("Give either --instance with --maps, or --candidates with --references")
    if map_mode and (args.instance is None or args.maps is None):
        raise UsageError("--instance and --maps go together")
    if text_mode and (args.candidates is None or args.references is None):
        raise UsageError("--candidates and --references go together")

    result = evaluate_maps(args) if map_mode else evaluate_text(args)
    text = dumps_json(result)
    if args.output is not None:
        with stage("report", {}):
            args.output.parent.mkdir(parents=True, exist_ok=True)
            args.output.write_text(text, encoding="utf-8")
    if text_mode:
        print(f"Rouge-L F1 x100: {result['rouge_l_f1_x100']:.2f}")
    print(text, end="")
    return 0
