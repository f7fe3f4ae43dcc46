"""Per-particle MCMC hybridization filter ("Finkelstein" filter).

Each output particle is assembled locus-by-locus from the pool of
progressed candidates, by running a Metropolis-Hastings-style chain over
source indices. A proposal replaces the source of one locus; the
acceptance ratio weighs how well the hybrid fits the forward dynamics,
summed over candidate histories. Three acceptance-ratio variants are
provided:

* ``full``   — products over all loci (reference; degenerates in high L),
* ``local``  — products restricted to a lattice ball around the proposal,
* ``sampled``— the local ratio with history sums replaced by
  Horvitz-Thompson estimates over H sampled histories.

This module is the definitional, per-chain implementation used by the
tests and small-scale oracles. Production steps run all M chains in
lockstep through the compiled kernel in :mod:`latticefilter._engine`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.random import Generator
from scipy.special import logsumexp

from .errors import (
    DegenerateLikelihoodError,
    InvalidDimensionError,
    MemoryBudgetError,
    NumericError,
)
from .model import (
    ModelSpec,
    log_likelihood_matrix,
    progress_mean,
    sample_initial,
)
from .rng import derive_seed

_LOG_2PI = float(np.log(2.0 * np.pi))
_LOG_RHO_CAP = 700.0  # keeps exp() finite; acceptance only needs min(1, rho)

RHO_VARIANTS = ("full", "local", "sampled")
G_VARIANTS = ("uniform", "bentlog")
DENOMINATOR_MODES = ("stored_eta", "fresh_eta")


@dataclass(frozen=True)
class FinkelsteinConfig:
    particle_count: int = 400
    history_count: int = 45
    radius: int = 1
    sweeps: int = 20  # chain length is sweeps * L steps
    rho_variant: str = "sampled"
    g_variant: str = "bentlog"
    bentlog_a: float = 5.0
    bentlog_b: float = 5.0
    denominator_mode: str = "stored_eta"
    g_floor: float = 1e-12
    max_tensor_entries: int = 500_000_000

    def __post_init__(self):
        if self.particle_count < 1 or self.history_count < 1:
            raise InvalidDimensionError("particle_count and history_count must be >= 1")
        if self.radius < 0 or self.sweeps < 0:
            raise InvalidDimensionError("radius must be >= 0 and sweeps >= 0")
        if self.rho_variant not in RHO_VARIANTS:
            raise InvalidDimensionError(f"unknown rho_variant {self.rho_variant!r}")
        if self.g_variant not in G_VARIANTS:
            raise InvalidDimensionError(f"unknown g_variant {self.g_variant!r}")
        if self.denominator_mode not in DENOMINATOR_MODES:
            raise InvalidDimensionError(
                f"unknown denominator_mode {self.denominator_mode!r}"
            )
        if self.g_floor <= 0 or self.bentlog_a <= 0 or self.bentlog_b <= 0:
            raise InvalidDimensionError("g_floor and bentlog constants must be positive")


@dataclass(frozen=True)
class NeighborhoodIndex:
    """Per-locus index balls on the 1-D lattice: {k : |k - l| <= r}."""

    radius: int
    balls: tuple[np.ndarray, ...]

    def ball(self, locus: int) -> np.ndarray:
        return self.balls[locus]


def build_neighborhoods(L: int, radius: int) -> NeighborhoodIndex:
    if L < 1 or radius < 0:
        raise InvalidDimensionError("need L >= 1 and radius >= 0")
    balls = tuple(
        np.arange(max(0, l - radius), min(L, l + radius + 1)) for l in range(L)
    )
    return NeighborhoodIndex(radius=radius, balls=balls)


@dataclass(frozen=True)
class PrecomputedStep:
    """Everything the chains read, fixed for one time step.

    Index convention for the forward-density tensor: ``log_fwd[j, i, l]``
    is the log density of candidate value i at locus l conditional on
    history particle j.
    """

    raw: np.ndarray  # (M, L) progressed candidate values
    log_lik: np.ndarray  # (M, L)
    log_fwd: np.ndarray  # (M, M, L)
    log_sum_fwd: np.ndarray  # (M, L): log sum_j exp(log_fwd[j, i, l])
    log_g: np.ndarray  # (M, M, L): log history-sampling weight g(f)
    log_g_norm: np.ndarray  # (M, L): log sum_j g
    g_cdf: np.ndarray  # (M, L, M): history-sampling CDF over j per (i, l)
    w_cdf: np.ndarray  # (L, M): proposal CDF over candidates per locus
    logf_min: np.ndarray  # (L,) per-locus extremes of log_fwd
    logf_max: np.ndarray

    @property
    def particle_count(self) -> int:
        return self.raw.shape[0]

    @property
    def locus_count(self) -> int:
        return self.raw.shape[1]


@dataclass
class ChainState:
    """One chain's source-index vector and history matrix."""

    iota: np.ndarray  # (L,) candidate indices in 0..M-1
    eta: np.ndarray  # (L, H) history indices in 0..M-1
    step: int = 0
    accepted_count: int = 0


@dataclass(frozen=True)
class Proposal:
    locus: int
    iota_star: int
    eta_star: np.ndarray | None = None  # (H,), sampled variant only


@dataclass(frozen=True)
class ChainDiagnostics:
    """Per-chain summaries of one hybridization step."""

    acceptance_rate: np.ndarray  # (M,)
    modal_history_fraction: np.ndarray  # (M,)

    @property
    def mean_acceptance(self) -> float:
        return float(np.mean(self.acceptance_rate))


def g_uniform(f):
    """Constant history-sampling weight."""
    return np.ones_like(np.asarray(f, dtype=float)) if np.ndim(f) else 1.0


def g_bentlog(f, f_min, f_max, a, b, floor):
    """Piecewise-linear-in-log history weight, floored away from zero.

    g(f) = max(floor, (log f - log f_min)/a + max(0, log f - log f_max + b))
    for f in [f_min, f_max]; monotone increasing in f.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0) or f_min <= 0 or f_max <= 0:
        raise InvalidDimensionError("g_bentlog requires positive densities")
    logf = np.log(f)
    val = (logf - np.log(f_min)) / a + np.maximum(0.0, logf - np.log(f_max) + b)
    out = np.maximum(floor, val)
    return float(out) if out.ndim == 0 else out


def _bentlog_from_logs(logf, logf_min, logf_max, a, b):
    # Same bend as g_bentlog but taking already-log inputs, per locus.
    return (logf - logf_min) / a + np.maximum(0.0, logf - logf_max + b)


def precompute(
    prior: np.ndarray,
    y: np.ndarray,
    m: ModelSpec,
    cfg: FinkelsteinConfig,
    rng: Generator,
) -> PrecomputedStep:
    """Progress every prior particle once and fill the density tensors."""
    prior = np.asarray(prior, dtype=float)
    M, L = prior.shape
    if M * M * L > cfg.max_tensor_entries:
        raise MemoryBudgetError(
            f"forward-density tensor needs {M * M * L} entries, "
            f"budget is {cfg.max_tensor_entries}"
        )
    means = progress_mean(prior, m)  # (M, L), per history j
    raw = means + np.sqrt(m.novelty_var) * rng.standard_normal((M, L))
    log_lik = log_likelihood_matrix(y, raw, m)

    # log f[j, i, l]: candidate value raw[i, l] against history mean means[j, l]
    diff = raw[None, :, :] - means[:, None, :]
    log_fwd = -0.5 * (
        diff * diff / m.novelty_var + np.log(m.novelty_var) + _LOG_2PI
    )
    if not np.all(np.isfinite(log_fwd)):
        j, i, l = np.argwhere(~np.isfinite(log_fwd))[0]
        raise NumericError(f"non-finite forward density at (j={j}, i={i}, l={l})")
    log_sum_fwd = logsumexp(log_fwd, axis=0)

    logf_min = log_fwd.min(axis=(0, 1))
    logf_max = log_fwd.max(axis=(0, 1))
    if cfg.g_variant == "uniform":
        g = np.ones_like(log_fwd)
    else:
        g = _bentlog_from_logs(
            log_fwd, logf_min, logf_max, cfg.bentlog_a, cfg.bentlog_b
        )
        g_ceiling = g.max(axis=(0, 1))
        floor = cfg.g_floor * np.where(g_ceiling > 0, g_ceiling, 1.0)
        np.maximum(g, floor, out=g)
    with np.errstate(divide="ignore"):
        log_g = np.log(g)
    g_norm = g.sum(axis=0)  # (M=i, L)
    log_g_norm = np.log(g_norm)

    # (i, l, j) layout for sampling histories given (candidate i, locus l).
    g_cdf = np.cumsum(np.transpose(g, (1, 2, 0)), axis=2)
    g_cdf /= g_cdf[:, :, -1:]
    g_cdf = np.ascontiguousarray(g_cdf)

    # Proposal CDFs per locus from the likelihood weights.
    col_max = log_lik.max(axis=0)
    if not np.all(np.isfinite(col_max)):
        raise DegenerateLikelihoodError("a locus has all-zero likelihood weights")
    w = np.exp(log_lik - col_max)
    w_cdf = np.cumsum(w.T, axis=1)
    w_cdf /= w_cdf[:, -1:]
    w_cdf = np.ascontiguousarray(w_cdf)

    return PrecomputedStep(
        raw=raw,
        log_lik=log_lik,
        log_fwd=log_fwd,
        log_sum_fwd=log_sum_fwd,
        log_g=log_g,
        log_g_norm=log_g_norm,
        g_cdf=g_cdf,
        w_cdf=w_cdf,
        logf_min=logf_min,
        logf_max=logf_max,
    )


def _sample_cdf(cdf: np.ndarray, u) -> np.ndarray:
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, cdf.shape[-1] - 1)


def init_chain(pre: PrecomputedStep, cfg: FinkelsteinConfig, rng: Generator) -> ChainState:
    """Draw the starting source vector (per-locus likelihood weights) and
    history matrix (g-weights conditional on the starting sources)."""
    M, L = pre.particle_count, pre.locus_count
    H = cfg.history_count
    iota = np.empty(L, dtype=np.int64)
    eta = np.empty((L, H), dtype=np.int64)
    for l in range(L):
        iota[l] = _sample_cdf(pre.w_cdf[l], rng.random())
        eta[l] = _sample_cdf(pre.g_cdf[iota[l], l], rng.random(H))
    return ChainState(iota=iota, eta=eta)


def propose(
    pre: PrecomputedStep,
    chain: ChainState,
    cfg: FinkelsteinConfig,
    rng: Generator,
) -> Proposal:
    """Uniform locus, likelihood-weighted source, g-weighted histories."""
    L = pre.locus_count
    locus = int(rng.integers(L))
    iota_star = int(_sample_cdf(pre.w_cdf[locus], rng.random()))
    eta_star = None
    if cfg.rho_variant == "sampled":
        eta_star = _sample_cdf(
            pre.g_cdf[iota_star, locus], rng.random(cfg.history_count)
        ).astype(np.int64)
    return Proposal(locus=locus, iota_star=iota_star, eta_star=eta_star)


def _log_products(pre: PrecomputedStep, iota: np.ndarray, loci: np.ndarray) -> np.ndarray:
    # For each history j, sum of log_fwd over the given loci at the current
    # source assignments: returns (M,).
    return pre.log_fwd[:, iota[loci], loci].sum(axis=1)


def _log_rho_exact(pre, chain, proposal, loci) -> float:
    iota = chain.iota
    lam, i_star = proposal.locus, proposal.iota_star
    base = _log_products(pre, iota, loci)
    prop = base
    if lam in loci:
        prop = base - pre.log_fwd[:, iota[lam], lam] + pre.log_fwd[:, i_star, lam]
    log_ratio = logsumexp(prop) - logsumexp(base)
    mean_ratio = pre.log_sum_fwd[iota[lam], lam] - pre.log_sum_fwd[i_star, lam]
    # Cap below overflow: everything above 1 is accepted anyway.
    return float(min(log_ratio + mean_ratio, _LOG_RHO_CAP))


def rho_full(pre: PrecomputedStep, chain: ChainState, proposal: Proposal) -> float:
    """Acceptance ratio with products over every locus."""
    loci = np.arange(pre.locus_count)
    if proposal.iota_star == chain.iota[proposal.locus]:
        return 1.0
    return float(np.exp(_log_rho_exact(pre, chain, proposal, loci)))


def rho_local(
    pre: PrecomputedStep,
    chain: ChainState,
    proposal: Proposal,
    nbhd: NeighborhoodIndex,
) -> float:
    """Acceptance ratio with products restricted to the ball around the locus."""
    if proposal.iota_star == chain.iota[proposal.locus]:
        return 1.0
    return float(
        np.exp(_log_rho_exact(pre, chain, proposal, nbhd.ball(proposal.locus)))
    )


def _log_ht_sum(pre, histories, iota, loci, lam, weight_source) -> float:
    # Horvitz-Thompson estimate of sum_j prod_{l in loci} f[j -> iota_l, l],
    # using the given histories with inclusion weights g_lam(h, weight_source).
    hist = np.asarray(histories)
    products = pre.log_fwd[hist[:, None], iota[loci][None, :], loci[None, :]].sum(axis=1)
    terms = (
        pre.log_g_norm[weight_source, lam]
        - pre.log_g[hist, weight_source, lam]
        + products
    )
    return float(logsumexp(terms) - np.log(hist.size))


def rho_sampled(
    pre: PrecomputedStep,
    chain: ChainState,
    proposal: Proposal,
    nbhd: NeighborhoodIndex,
    cfg: FinkelsteinConfig,
) -> float:
    """Acceptance ratio with history sums replaced by H-sample estimates.

    The numerator always uses the freshly proposed histories weighted
    against the proposed source. The denominator depends on
    ``cfg.denominator_mode``: ``stored_eta`` reuses the chain's stored
    history row for the locus (the histories that justified the current
    value when it was accepted); ``fresh_eta`` reuses the proposed
    histories, reweighted against the current source.
    """
    if proposal.eta_star is None:
        raise InvalidDimensionError("rho_sampled needs a proposal with eta_star")
    lam, i_star = proposal.locus, proposal.iota_star
    iota = chain.iota
    i_cur = iota[lam]
    ball = nbhd.ball(lam)
    iota_prop = iota.copy()
    iota_prop[lam] = i_star
    log_num = _log_ht_sum(pre, proposal.eta_star, iota_prop, ball, lam, i_star)
    if cfg.denominator_mode == "stored_eta":
        histories = chain.eta[lam]
    else:
        histories = proposal.eta_star
    log_den = _log_ht_sum(pre, histories, iota, ball, lam, i_cur)
    mean_ratio = pre.log_sum_fwd[i_cur, lam] - pre.log_sum_fwd[i_star, lam]
    return float(np.exp(min(log_num - log_den + mean_ratio, _LOG_RHO_CAP)))


def _rho(pre, chain, proposal, nbhd, cfg) -> float:
    if cfg.rho_variant == "full":
        return rho_full(pre, chain, proposal)
    if cfg.rho_variant == "local":
        return rho_local(pre, chain, proposal, nbhd)
    return rho_sampled(pre, chain, proposal, nbhd, cfg)


def chain_step(
    pre: PrecomputedStep,
    chain: ChainState,
    nbhd: NeighborhoodIndex,
    cfg: FinkelsteinConfig,
    rng: Generator,
) -> ChainState:
    """One proposal/accept step. Mutates and returns ``chain``."""
    proposal = propose(pre, chain, cfg, rng)
    rho = _rho(pre, chain, proposal, nbhd, cfg)
    if rng.random() < rho:
        chain.iota[proposal.locus] = proposal.iota_star
        if proposal.eta_star is not None:
            chain.eta[proposal.locus] = proposal.eta_star
        chain.accepted_count += 1
    chain.step += 1
    return chain


def run_chain(
    pre: PrecomputedStep,
    nbhd: NeighborhoodIndex,
    cfg: FinkelsteinConfig,
    rng: Generator,
) -> np.ndarray:
    """Init, run sweeps*L steps, assemble the output particle."""
    chain = init_chain(pre, cfg, rng)
    for _ in range(cfg.sweeps * pre.locus_count):
        chain_step(pre, chain, nbhd, cfg, rng)
    return assemble_particle(pre, chain.iota)


def assemble_particle(pre: PrecomputedStep, iota: np.ndarray) -> np.ndarray:
    return pre.raw[iota, np.arange(pre.locus_count)]


def _modal_fraction(iota: np.ndarray, M: int) -> float:
    counts = np.bincount(iota, minlength=M)
    return float(counts.max() / iota.size)


def finkelstein_step(
    prior: np.ndarray,
    y: np.ndarray,
    m: ModelSpec,
    cfg: FinkelsteinConfig,
    rng: Generator,
) -> tuple[np.ndarray, ChainDiagnostics]:
    """Advance the whole ensemble one observation.

    Precomputes the shared density tensors once, then runs the M
    independent chains in lockstep through the compiled kernel. All
    randomness derives from ``rng`` in a fixed order, so the result is
    bit-identical for a fixed seed regardless of worker count.
    """
    from ._engine import run_chains_lockstep

    prior = np.asarray(prior, dtype=float)
    M, L = prior.shape
    pre = precompute(prior, y, m, cfg, rng)
    H = cfg.history_count

    # Vectorized chain initialization, chains indexed along axis 0.
    iota = np.empty((M, L), dtype=np.int64)
    for l in range(L):
        iota[:, l] = _sample_cdf(pre.w_cdf[l], rng.random(M))
    eta = np.empty((M, L, H), dtype=np.int64)
    for l in range(L):
        u = rng.random((M, H))
        for k in range(M):
            eta[k, l, :] = _sample_cdf(pre.g_cdf[iota[k, l], l], u[k])

    n_steps = cfg.sweeps * L
    accepts = run_chains_lockstep(
        pre.log_fwd,
        pre.log_sum_fwd,
        pre.log_g,
        pre.log_g_norm,
        pre.g_cdf,
        pre.w_cdf,
        iota,
        eta,
        n_steps,
        cfg.radius,
        RHO_VARIANTS.index(cfg.rho_variant),
        DENOMINATOR_MODES.index(cfg.denominator_mode),
        derive_seed(rng),
    )
    ensemble = pre.raw[iota, np.arange(L)]
    rate = accepts / max(n_steps, 1)
    modal = np.array([_modal_fraction(iota[k], M) for k in range(M)])
    return ensemble, ChainDiagnostics(acceptance_rate=rate, modal_history_fraction=modal)


def finkelstein_filter(
    observations: np.ndarray,
    m: ModelSpec,
    cfg: FinkelsteinConfig,
    rng: Generator,
) -> list[tuple[np.ndarray, ChainDiagnostics]]:
    ensemble = sample_initial(m, rng, size=cfg.particle_count)
    out = []
    for y in np.atleast_2d(observations):
        ensemble, diag = finkelstein_step(ensemble, y, m, cfg, rng)
        out.append((ensemble, diag))
    return out
