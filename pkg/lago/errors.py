"""Exception hierarchy for the LAGO toolkit."""

from typing import Optional


class LagoError(Exception):
    """Base class for all toolkit errors."""

    # Pipeline stage that raised the error, set by the experiment pipeline
    stage: Optional[str] = None


class DataError(LagoError, ValueError):
    """Invalid input data, malformed files or violated data invariants."""


class ShapeError(DataError):
    """Matrix dimensions do not agree."""


class UsageError(LagoError):
    """Bad command line or experiment configuration."""


class SolverError(LagoError, RuntimeError):
    """Numerical failure inside a solver."""

    def __init__(self, message: str, iteration: Optional[int] = None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


class RankDeficiencyError(SolverError):
    """Normal equations are singular; a positive ridge weight is required."""


class OracleError(SolverError):
    """Reference solver bound exceeded or cross-check failed."""
