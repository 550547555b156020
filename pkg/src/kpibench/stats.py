"""Statistical primitives shared by the benchmarks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Estimate:
    value: float
    sigma: float
    shots: int
    tag: str = ""

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")

    def to_dict(self) -> dict:
        return asdict(self)


def expectation_sigma(value: float, shots: int) -> float:
    """Standard error of a +-1-valued mean: sqrt((1 - v^2) / shots)."""
    if shots < 1:
        raise ValueError("shots must be positive")
    if abs(value) > 1 + 1e-12:
        raise ValueError(f"expectation value {value} outside [-1, 1]")
    return math.sqrt(max(0.0, 1.0 - value * value) / shots)


def aggregate_sigma(sigmas: Sequence[float]) -> float:
    """Root mean square of the four per-observable sigmas."""
    if len(sigmas) != 4:
        raise ValueError(f"expected 4 sigmas, got {len(sigmas)}")
    return math.sqrt(sum(s * s for s in sigmas) / 4)


def mean_sigma(sigmas: Sequence[float]) -> float:
    """Standard error of the mean of four independent estimates, sqrt(sum s^2) / 4."""
    return aggregate_sigma(sigmas) / 2


def expectation_from_eigenvalues(eigs: np.ndarray) -> Estimate:
    """Mean and standard error of +-1 samples."""
    eigs = np.asarray(eigs)
    shots = int(eigs.size)
    value = float(eigs.mean())
    return Estimate(value, expectation_sigma(value, shots), shots)


def binomial_sigma(successes: int, trials: int) -> float:
    if trials < 1:
        raise ValueError("trials must be positive")
    q = successes / trials
    return math.sqrt(q * (1 - q) / trials)
