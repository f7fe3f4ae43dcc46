"""Exact Kalman filter for the lattice model.

The model is linear-Gaussian, so the filtering distribution is available in
closed form and serves as ground truth for every accuracy metric in this
package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import InvalidDimensionError, SingularUpdateError
from .model import ModelSpec


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise InvalidDimensionError("covariance shape does not match mean length")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


def initial_belief(m: ModelSpec) -> GaussianBelief:
    L = m.locus_count
    return GaussianBelief(np.full(L, m.init_mean), m.init_var * np.eye(L))


def kalman_predict(belief: GaussianBelief, m: ModelSpec) -> GaussianBelief:
    """Time update: mean' = P mean, cov' = P cov P^T + N."""
    P = m.transition_matrix()
    if belief.mean.size != m.locus_count:
        raise InvalidDimensionError("belief dimension does not match model")
    mean = P @ belief.mean
    cov = P @ belief.covariance @ P.T + np.diag(m.novelty_var)
    return GaussianBelief(mean, cov)


def kalman_update(belief: GaussianBelief, y: np.ndarray, m: ModelSpec) -> GaussianBelief:
    """Measurement update with identity observation matrix and noise E.

    The covariance is symmetrized after the update to suppress drift.
    """
    y = np.asarray(y, dtype=float)
    if y.size != m.locus_count:
        raise InvalidDimensionError("observation length does not match model")
    S = belief.covariance + np.diag(m.obs_var)
    # Positive obs_var makes S positive definite; guard anyway.
    try:
        factor = cho_factor(S, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularUpdateError("innovation covariance is singular") from exc
    K = cho_solve(factor, belief.covariance).T  # K = cov @ S^-1
    mean = belief.mean + K @ (y - belief.mean)
    cov = belief.covariance - K @ belief.covariance
    cov = 0.5 * (cov + cov.T)
    return GaussianBelief(mean, cov)


def kalman_filter(observations: np.ndarray, m: ModelSpec) -> list[GaussianBelief]:
    """Exact filtering run; returns T+1 beliefs, index 0 is the prior.

    ``observations`` has shape (T, L); T may be zero.
    """
    beliefs = [initial_belief(m)]
    for y in np.atleast_2d(observations) if np.size(observations) else []:
        predicted = kalman_predict(beliefs[-1], m)
        beliefs.append(kalman_update(predicted, y, m))
    return beliefs


def beliefs_to_rows(beliefs: list[GaussianBelief]) -> list[tuple[int, int, float, float]]:
    """Flatten beliefs to (time, locus, mean, variance) rows for CSV export."""
    rows = []
    for t, b in enumerate(beliefs):
        for locus in range(b.mean.size):
            rows.append((t, locus, float(b.mean[locus]), float(b.covariance[locus, locus])))
    return rows
