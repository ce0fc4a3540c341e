"""CLI subcommands; each module registers one subparser."""

from . import evaluate, graph, solve, sweep, synth

COMMANDS = (graph, synth, solve, evaluate, sweep)
