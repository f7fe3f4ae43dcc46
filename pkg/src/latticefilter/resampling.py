"""Log-space weight handling and resampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator

from .errors import DegenerateLikelihoodError


@dataclass(frozen=True)
class DegeneracyStats:
    """Weight-collapse diagnostics for one resampling event."""

    max_weight: float
    ess: float


def normalize_log_weights(log_w: np.ndarray, context: str = "") -> np.ndarray:
    """Normalized linear weights from log weights via max-subtraction.

    Raises DegenerateLikelihoodError when every weight underflowed.
    """
    log_w = np.asarray(log_w, dtype=float)
    if log_w.size == 0 or not np.any(log_w > -np.inf):
        where = f" ({context})" if context else ""
        raise DegenerateLikelihoodError(f"all weights underflowed to zero{where}")
    shifted = log_w - np.max(log_w)
    w = np.exp(shifted)
    return w / np.sum(w)


def effective_sample_size(weights: np.ndarray) -> float:
    """ESS = 1 / sum of squared normalized weights; lies in [1, M]."""
    return float(1.0 / np.sum(np.square(weights)))


def degeneracy_stats(weights: np.ndarray) -> DegeneracyStats:
    return DegeneracyStats(float(np.max(weights)), effective_sample_size(weights))


def multinomial_indices(weights: np.ndarray, count: int, rng: Generator) -> np.ndarray:
    """Draw ``count`` indices iid from the normalized weight vector."""
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0  # guard against rounding shortfall
    return np.searchsorted(cdf, rng.random(count), side="right")


def systematic_indices(weights: np.ndarray, count: int, rng: Generator) -> np.ndarray:
    """Systematic (low-variance) resampling; optional alternative."""
    positions = (rng.random() + np.arange(count)) / count
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, positions, side="right")
