"""Distributed solvers and small-instance verification oracles."""

from .oracle import ScalarInstance, penalty_oracle, scalar_ineq_oracle, scalar_tv_oracle
from .pdmm import PdmmConfig, PdmmResult, max_violation, pdmm_solve
from .tv import TvConfig, TvResult, tv_objective, tv_solve

__all__ = [
    "ScalarInstance",
    "penalty_oracle",
    "scalar_ineq_oracle",
    "scalar_tv_oracle",
    "PdmmConfig",
    "PdmmResult",
    "max_violation",
    "pdmm_solve",
    "TvConfig",
    "TvResult",
    "tv_objective",
    "tv_solve",
]
