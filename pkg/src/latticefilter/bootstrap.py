"""Bootstrap particle filter.

Included as the baseline that collapses under weight degeneracy as the
lattice grows; the degeneracy statistics it emits are the point of running
it at all.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator

from .model import ModelSpec, log_likelihood_matrix, progress_sample, sample_initial
from .resampling import (
    DegeneracyStats,
    degeneracy_stats,
    multinomial_indices,
    normalize_log_weights,
    systematic_indices,
)


def bootstrap_step(
    prior: np.ndarray,
    y: np.ndarray,
    m: ModelSpec,
    rng: Generator,
    systematic: bool = False,
) -> tuple[np.ndarray, DegeneracyStats]:
    """Progress, weight, and resample one step.

    ``prior`` is an equally-weighted (M, L) ensemble; the result is again
    equally weighted. Weights are accumulated in log-space across loci.
    """
    progressed = progress_sample(prior, m, rng)
    log_w = log_likelihood_matrix(y, progressed, m).sum(axis=1)
    weights = normalize_log_weights(log_w, context="bootstrap step")
    stats = degeneracy_stats(weights)
    pick = systematic_indices if systematic else multinomial_indices
    idx = pick(weights, progressed.shape[0], rng)
    return progressed[idx], stats


def bootstrap_filter(
    observations: np.ndarray,
    m: ModelSpec,
    M: int,
    rng: Generator,
    systematic: bool = False,
) -> list[tuple[np.ndarray, DegeneracyStats]]:
    """Run the filter over all observations; returns one (ensemble, stats)
    pair per time step."""
    ensemble = sample_initial(m, rng, size=M)
    out = []
    for y in np.atleast_2d(observations):
        ensemble, stats = bootstrap_step(ensemble, y, m, rng, systematic=systematic)
        out.append((ensemble, stats))
    return out
