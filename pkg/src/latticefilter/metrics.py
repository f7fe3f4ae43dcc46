"""Accuracy metrics against the exact filtering oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .block import ZonePartition
from .errors import InsufficientParticlesError, InvalidDimensionError, SingularCovarianceError
from .kalman import GaussianBelief

LOCUS_CENTRAL = "zone_central"
LOCUS_PERIPHERAL = "zone_peripheral"
LOCUS_NA = "n/a"

DEFAULT_RIDGE = 1e-9


@dataclass(frozen=True)
class MetricsRecord:
    time: int
    per_locus_sq_err: np.ndarray
    kl_divergence: float
    variance_ratio: np.ndarray
    locus_class: tuple[str, ...]


def ensemble_gaussian_fit(e: np.ndarray, ridge: float = DEFAULT_RIDGE) -> GaussianBelief:
    """Sample mean and covariance (divisor M-1) with a relative diagonal ridge.

    The ridge keeps the fit invertible when the ensemble collapses or when
    M < L; it is scaled by trace/L so it is unit-free.
    """
    e = np.asarray(e, dtype=float)
    M, L = e.shape
    if M < 2:
        raise InsufficientParticlesError(f"covariance fit needs M >= 2, got {M}")
    mean = e.mean(axis=0)
    centered = e - mean
    cov = centered.T @ centered / (M - 1)
    tr = np.trace(cov)
    bump = ridge * (tr / L if tr > 0 else 1.0)
    cov = cov + bump * np.eye(L)
    return GaussianBelief(mean, cov)


def _chol_logdet(cov, name):
    try:
        factor = cho_factor(cov, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError(f"{name} covariance is not positive definite") from exc
    logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
    return factor, logdet


def gaussian_kl(p: GaussianBelief, q: GaussianBelief) -> float:
    """KL(p || q) between Gaussians via Cholesky factorizations."""
    L = p.mean.size
    if q.mean.size != L:
        raise InvalidDimensionError("dimension mismatch between p and q")
    q_factor, logdet_q = _chol_logdet(q.covariance, "q")
    _, logdet_p = _chol_logdet(p.covariance, "p")
    diff = q.mean - p.mean
    trace_term = np.trace(cho_solve(q_factor, p.covariance))
    quad_term = diff @ cho_solve(q_factor, diff)
    return float(0.5 * (trace_term + quad_term - L + logdet_q - logdet_p))


def per_locus_sq_err(e: np.ndarray, oracle: GaussianBelief) -> np.ndarray:
    """(ensemble mean - oracle mean)^2 per locus."""
    mean = np.asarray(e, dtype=float).mean(axis=0)
    if mean.size != oracle.mean.size:
        raise InvalidDimensionError("ensemble loci do not match oracle")
    return np.square(mean - oracle.mean)


def variance_ratio(e: np.ndarray, oracle: GaussianBelief) -> np.ndarray:
    """Per-locus ensemble variance over oracle variance."""
    var = np.asarray(e, dtype=float).var(axis=0, ddof=1)
    return var / np.diag(oracle.covariance)


def classify_loci(partition: ZonePartition) -> tuple[str, ...]:
    """Tag the middle locus of each zone central, the rest peripheral.

    For even-size zones there is no exact center and every locus is
    peripheral; a size-1 zone's only locus is its center.
    """
    tags = [LOCUS_PERIPHERAL] * partition.locus_count
    for start, stop in partition.zones:
        size = stop - start
        if size % 2 == 1:
            tags[start + size // 2] = LOCUS_CENTRAL
    return tuple(tags)


def summed_locus_trace(
    series: dict[str, np.ndarray], from_locus: int, to_locus: int
) -> dict[str, np.ndarray]:
    """Sum each (T, L) series over loci from_locus..to_locus inclusive.

    Used for the single-run time-trace report, which plots a small locus
    band of the truth, the observations, and each filter mean.
    """
    out = {}
    for name, values in series.items():
        values = np.asarray(values, dtype=float)
        if not (0 <= from_locus <= to_locus < values.shape[1]):
            raise InvalidDimensionError(
                f"locus range {from_locus}..{to_locus} out of bounds for {name}"
            )
        out[name] = values[:, from_locus : to_locus + 1].sum(axis=1)
    return out
