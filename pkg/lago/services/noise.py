"""Additive noise on victim embeddings, a stand-in for local DP defenses."""

from enum import Enum
from typing import Sequence, Union

import numpy as np

from lago.errors import DataError

Seed = Union[int, Sequence[int]]


class NoiseMechanism(Enum):
    NONE = "none"
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"


def parse_mechanism(name: Union[str, NoiseMechanism]) -> NoiseMechanism:
    """Resolve a mechanism name; unknown names raise DataError."""
    if isinstance(name, NoiseMechanism):
        return name
    try:
        return NoiseMechanism(str(name).lower())
    except ValueError:
        known = ", ".join(m.value for m in NoiseMechanism)
        raise DataError(f"Unknown noise mechanism '{name}' (expected one of: {known})") from None


def inject_noise(E: np.ndarray, mechanism: Union[str, NoiseMechanism], scale: float, seed: Seed) -> np.ndarray:
    """
    Add i.i.d. noise to every entry of an embedding matrix.

    Args:
        E: Embedding matrix, rows are samples
        mechanism: none, gaussian (std = scale) or laplace (scale parameter)
        scale: Noise scale, at least 0
        seed: Integer or integer sequence; same seed gives the same noise

    Returns:
        A new noisy matrix, or E itself when scale is 0 or mechanism is none

    Raises:
        DataError: If the mechanism is unknown or scale is negative
    """
    mechanism = parse_mechanism(mechanism)
    if not (scale >= 0 and np.isfinite(scale)):
        raise DataError(f"Noise scale must be finite and nonnegative, got {scale}")
    E = np.asarray(E, dtype=np.float64)
    if scale == 0 or mechanism is NoiseMechanism.NONE:
        return E

    rng = np.random.default_rng(seed)
    if mechanism is NoiseMechanism.GAUSSIAN:
        return E + rng.normal(0.0, scale, size=E.shape)
    return E + rng.laplace(0.0, scale, size=E.shape)
