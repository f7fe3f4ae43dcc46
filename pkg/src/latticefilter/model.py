"""Locally-coupled linear-Gaussian lattice state-space model.

The hidden state is a length-L vector over lattice loci. It evolves through
a tridiagonal progression band (each locus hears only its immediate
neighbors), plus independent Gaussian novelty noise with a per-locus
variance. Observations are the state plus independent Gaussian measurement
error, again with per-locus variance. All densities are evaluated in
log-space; products over loci underflow in linear space once L is a few
dozen.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator

from .errors import InvalidDimensionError, NumericError

_LOG_2PI = float(np.log(2.0 * np.pi))

# Benchmark-model constants: tridiagonal band, alternating novelty
# variances, and a reduced observation variance on a fixed locus stride.
BAND_SUB = 0.4
BAND_DIAG = 0.35
BAND_SUPER = 0.05
NOVELTY_HIGH = 1.0
NOVELTY_LOW = 0.25
OBS_HIGH = 1.0
OBS_LOW = 0.16
INIT_MEAN = 0.0
INIT_VAR = 5.0
DEFAULT_OBS_STRIDE = 4


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of the lattice model.

    The transition band is ``result[l] = a*x[l-1] + b*x[l] + c*x[l+1]``
    with missing neighbors contributing zero (truncated band).
    """

    locus_count: int
    sub_coeff: float
    diag_coeff: float
    super_coeff: float
    novelty_var: np.ndarray
    obs_var: np.ndarray
    init_mean: float = INIT_MEAN
    init_var: float = INIT_VAR
    low_obs_var_stride: int = DEFAULT_OBS_STRIDE

    def __post_init__(self):
        L = self.locus_count
        if L < 1:
            raise InvalidDimensionError(f"locus_count must be >= 1, got {L}")
        object.__setattr__(self, "novelty_var", np.asarray(self.novelty_var, dtype=float))
        object.__setattr__(self, "obs_var", np.asarray(self.obs_var, dtype=float))
        if self.novelty_var.shape != (L,):
            raise InvalidDimensionError("novelty_var must have length locus_count")
        if self.obs_var.shape != (L,):
            raise InvalidDimensionError("obs_var must have length locus_count")
        if not np.all(self.novelty_var > 0):
            raise InvalidDimensionError("novelty_var entries must be positive")
        if not np.all(self.obs_var > 0):
            raise InvalidDimensionError("obs_var entries must be positive")
        if abs(self.sub_coeff) + abs(self.diag_coeff) + abs(self.super_coeff) >= 1:
            raise InvalidDimensionError("|a| + |b| + |c| must be < 1 for stability")
        if self.init_var < 0:
            raise InvalidDimensionError("init_var must be nonnegative")
        if self.low_obs_var_stride < 1:
            raise InvalidDimensionError("low_obs_var_stride must be positive")

    def transition_matrix(self) -> np.ndarray:
        """Dense L x L tridiagonal progression matrix."""
        L = self.locus_count
        P = np.zeros((L, L))
        idx = np.arange(L)
        P[idx, idx] = self.diag_coeff
        P[idx[1:], idx[:-1]] = self.sub_coeff
        P[idx[:-1], idx[1:]] = self.super_coeff
        return P


def build_paper_model(L: int, stride: int = DEFAULT_OBS_STRIDE) -> ModelSpec:
    """The benchmark preset: a=.4, b=.35, c=.05, alternating novelty
    variances (1, .25), reduced observation variance (.16) on every
    ``stride``-th locus starting at the first, init N(0, 5) per locus.
    """
    if L < 2:
        raise InvalidDimensionError(f"L must be >= 2, got {L}")
    novelty = np.where(np.arange(L) % 2 == 0, NOVELTY_HIGH, NOVELTY_LOW)
    obs = np.where(np.arange(L) % stride == 0, OBS_LOW, OBS_HIGH)
    return ModelSpec(
        locus_count=L,
        sub_coeff=BAND_SUB,
        diag_coeff=BAND_DIAG,
        super_coeff=BAND_SUPER,
        novelty_var=novelty,
        obs_var=obs,
        low_obs_var_stride=stride,
    )


def progress_mean(x: np.ndarray, m: ModelSpec) -> np.ndarray:
    """Apply the tridiagonal band along the last axis.

    Accepts a single state vector (L,) or a stack of them (..., L).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m.locus_count:
        raise InvalidDimensionError(
            f"state has {x.shape[-1]} loci, model has {m.locus_count}"
        )
    out = m.diag_coeff * x
    out[..., 1:] += m.sub_coeff * x[..., :-1]
    out[..., :-1] += m.super_coeff * x[..., 1:]
    return out


def sample_initial(m: ModelSpec, rng: Generator, size: int | None = None) -> np.ndarray:
    """Draw iid N(init_mean, init_var) states: (L,) or (size, L)."""
    shape = (m.locus_count,) if size is None else (size, m.locus_count)
    return m.init_mean + np.sqrt(m.init_var) * rng.standard_normal(shape)


def progress_sample(x: np.ndarray, m: ModelSpec, rng: Generator) -> np.ndarray:
    """One transition step: band mean plus per-locus novelty noise."""
    mean = progress_mean(x, m)
    return mean + np.sqrt(m.novelty_var) * rng.standard_normal(mean.shape)


def observe_sample(z: np.ndarray, m: ModelSpec, rng: Generator) -> np.ndarray:
    """Observe a state: identity map plus per-locus measurement noise."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != m.locus_count:
        raise InvalidDimensionError("state length does not match model")
    return z + np.sqrt(m.obs_var) * rng.standard_normal(z.shape)


def _gauss_logpdf(x, mean, var):
    return -0.5 * ((x - mean) ** 2 / var + np.log(var) + _LOG_2PI)


def forward_log_density(x_prev: np.ndarray, z_val: float, locus: int, m: ModelSpec) -> float:
    """log f_P(z_val at `locus` | previous full state x_prev)."""
    if not 0 <= locus < m.locus_count:
        raise InvalidDimensionError(f"locus {locus} out of range")
    mean = progress_mean(x_prev, m)[locus]
    return float(_gauss_logpdf(z_val, mean, m.novelty_var[locus]))


def forward_density(x_prev: np.ndarray, z_val: float, locus: int, m: ModelSpec) -> float:
    return float(np.exp(forward_log_density(x_prev, z_val, locus, m)))


def obs_log_likelihood(y_val: float, z_val: float, locus: int, m: ModelSpec) -> float:
    """log f(y_val | z_val) at one locus."""
    if not 0 <= locus < m.locus_count:
        raise InvalidDimensionError(f"locus {locus} out of range")
    return float(_gauss_logpdf(y_val, z_val, m.obs_var[locus]))


def obs_likelihood(y_val: float, z_val: float, locus: int, m: ModelSpec) -> float:
    return float(np.exp(obs_log_likelihood(y_val, z_val, locus, m)))


def log_likelihood_matrix(y: np.ndarray, Z: np.ndarray, m: ModelSpec) -> np.ndarray:
    """Per-locus observation log-likelihoods for a particle stack.

    Z has shape (M, L), y shape (L,); returns (M, L).
    """
    out = _gauss_logpdf(np.asarray(y, dtype=float), np.asarray(Z, dtype=float), m.obs_var)
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite observation log-likelihood")
    return out


def simulate_trajectory(
    m: ModelSpec, T: int, rng: Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate T steps; returns (states, observations), each (T, L).

    The initial state at t=0 is drawn internally and not observed;
    observations start at t=1 to match the filtering recursion.
    """
    if T < 1:
        raise InvalidDimensionError(f"T must be >= 1, got {T}")
    states = np.empty((T, m.locus_count))
    obs = np.empty((T, m.locus_count))
    x = sample_initial(m, rng)
    for t in range(T):
        x = progress_sample(x, m, rng)
        states[t] = x
        obs[t] = observe_sample(x, m, rng)
    return states, obs
