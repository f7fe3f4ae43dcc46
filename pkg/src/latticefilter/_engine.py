"""Compiled lockstep driver for the hybridization chains.

All M chains for one time step advance together through a single njit
kernel. The kernel owns its randomness: it seeds numba's thread-local
Mersenne state once and draws in a fixed (step, chain) order, so output is
bit-identical for a fixed seed no matter how the caller schedules work.
"""

from __future__ import annotations

import numpy as np
from numba import njit

VARIANT_FULL = 0
VARIANT_LOCAL = 1
VARIANT_SAMPLED = 2

DEN_STORED = 0
DEN_FRESH = 1


@njit(cache=True, nogil=True)
def _logsumexp(values, n):
    vmax = values[0]
    for i in range(1, n):
        if values[i] > vmax:
            vmax = values[i]
    if vmax == -np.inf:
        return -np.inf
    acc = 0.0
    for i in range(n):
        acc += np.exp(values[i] - vmax)
    return vmax + np.log(acc)


@njit(cache=True, nogil=True)
def _draw_index(cdf, u):
    idx = np.searchsorted(cdf, u, side="right")
    if idx >= cdf.shape[0]:
        idx = cdf.shape[0] - 1
    return idx


@njit(cache=True, nogil=True)
def run_chains_lockstep(
    log_fwd,  # (M, M, L) [history j, candidate i, locus l]
    log_sum_fwd,  # (M, L)
    log_g,  # (M, M, L)
    log_g_norm,  # (M, L)
    g_cdf,  # (M, L, M) history CDF over j per (candidate i, locus l)
    w_cdf,  # (L, M) proposal CDF per locus
    iota,  # (M, L) int64, updated in place
    eta,  # (M, L, H) int64, updated in place
    n_steps,
    radius,
    variant,
    den_mode,
    seed,
):
    np.random.seed(seed)
    M, L = iota.shape
    H = eta.shape[2]
    n_hist = log_fwd.shape[0]
    accepts = np.zeros(M, dtype=np.int64)
    terms = np.empty(max(n_hist, H), dtype=np.float64)
    eta_star = np.empty(H, dtype=np.int64)

    for _ in range(n_steps):
        for k in range(M):
            lam = int(np.random.random() * L)
            if lam >= L:
                lam = L - 1
            i_star = _draw_index(w_cdf[lam], np.random.random())
            i_cur = iota[k, lam]

            if variant == VARIANT_FULL:
                lo, hi = 0, L
            else:
                lo = lam - radius
                if lo < 0:
                    lo = 0
                hi = lam + radius + 1
                if hi > L:
                    hi = L

            if variant == VARIANT_SAMPLED:
                for h in range(H):
                    eta_star[h] = _draw_index(
                        g_cdf[i_star, lam], np.random.random()
                    )
                # Numerator: proposed histories against the proposed source.
                for h in range(H):
                    j = eta_star[h]
                    acc = log_g_norm[i_star, lam] - log_g[j, i_star, lam]
                    for l in range(lo, hi):
                        cand = i_star if l == lam else iota[k, l]
                        acc += log_fwd[j, cand, l]
                    terms[h] = acc
                log_num = _logsumexp(terms, H)
                # Denominator: stored or fresh histories against the
                # current source.
                for h in range(H):
                    j = eta[k, lam, h] if den_mode == DEN_STORED else eta_star[h]
                    acc = log_g_norm[i_cur, lam] - log_g[j, i_cur, lam]
                    for l in range(lo, hi):
                        acc += log_fwd[j, iota[k, l], l]
                    terms[h] = acc
                log_den = _logsumexp(terms, H)
            else:
                for j in range(n_hist):
                    acc = 0.0
                    for l in range(lo, hi):
                        cand = i_star if l == lam else iota[k, l]
                        acc += log_fwd[j, cand, l]
                    terms[j] = acc
                log_num = _logsumexp(terms, n_hist)
                for j in range(n_hist):
                    acc = 0.0
                    for l in range(lo, hi):
                        acc += log_fwd[j, iota[k, l], l]
                    terms[j] = acc
                log_den = _logsumexp(terms, n_hist)

            log_rho = (
                log_num
                - log_den
                + log_sum_fwd[i_cur, lam]
                - log_sum_fwd[i_star, lam]
            )
            u = np.random.random()
            if np.log(u) < log_rho:
                iota[k, lam] = i_star
                if variant == VARIANT_SAMPLED:
                    for h in range(H):
                        eta[k, lam, h] = eta_star[h]
                accepts[k] += 1
    return accepts
