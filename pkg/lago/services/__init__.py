"""Experiment services: synthetic data, defense noise, execution and storage."""

from .experiment import ExperimentConfig, load_config, run_seed
from .noise import inject_noise
from .runner import ExperimentReport, ExperimentRunner, run_experiment
from .storage import ReportStore
from .synth import SynthInstance, SynthSpec, generate, load_instance, save_instance

__all__ = [
    "ExperimentConfig",
    "load_config",
    "run_seed",
    "inject_noise",
    "ExperimentReport",
    "ExperimentRunner",
    "run_experiment",
    "ReportStore",
    "SynthInstance",
    "SynthSpec",
    "generate",
    "load_instance",
    "save_instance",
]
