"""Particle filters for locally-coupled lattice state-space models.

Implements an MCMC-hybridization particle filter alongside bootstrap and
block particle filters and an exact Kalman oracle, plus a benchmark
harness that reproduces the reference simulation study.
"""

__version__ = "0.1.0"

from .block import ZonePartition, block_filter, block_step, make_partition
from .bootstrap import bootstrap_filter, bootstrap_step
from .finkelstein import (
    ChainDiagnostics,
    ChainState,
    FinkelsteinConfig,
    NeighborhoodIndex,
    PrecomputedStep,
    Proposal,
    build_neighborhoods,
    chain_step,
    finkelstein_filter,
    finkelstein_step,
    g_bentlog,
    g_uniform,
    init_chain,
    precompute,
    propose,
    rho_full,
    rho_local,
    rho_sampled,
    run_chain,
)
from .kalman import (
    GaussianBelief,
    initial_belief,
    kalman_filter,
    kalman_predict,
    kalman_update,
)
from .metrics import (
    classify_loci,
    ensemble_gaussian_fit,
    gaussian_kl,
    per_locus_sq_err,
    summed_locus_trace,
    variance_ratio,
)
from .model import (
    ModelSpec,
    build_paper_model,
    forward_density,
    obs_likelihood,
    observe_sample,
    progress_mean,
    progress_sample,
    sample_initial,
    simulate_trajectory,
)

__all__ = [name for name in dir() if not name.startswith("_")]
