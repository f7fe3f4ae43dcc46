"""Block particle filter: per-zone independent weighting and resampling.

The lattice is cut into contiguous zones; each zone of each output particle
is copied jointly from one source particle, chosen by zone-local likelihood
weights. Stitching across zone boundaries is what buys immunity to global
weight degeneracy, at the price of boundary bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator

from .errors import DegenerateLikelihoodError, InvalidDimensionError
from .model import ModelSpec, log_likelihood_matrix, progress_sample, sample_initial
from .resampling import multinomial_indices, normalize_log_weights


@dataclass(frozen=True)
class ZonePartition:
    """Ordered contiguous zones covering loci 0..L-1."""

    zones: tuple[tuple[int, int], ...]  # half-open (start, stop) ranges
    zone_size: int

    def __post_init__(self):
        expected = 0
        for start, stop in self.zones:
            if start != expected or stop <= start:
                raise InvalidDimensionError("zones must be contiguous and disjoint")
            if stop - start > self.zone_size:
                raise InvalidDimensionError("zone exceeds zone_size")
            expected = stop

    @property
    def locus_count(self) -> int:
        return self.zones[-1][1]

    def slices(self) -> list[slice]:
        return [slice(start, stop) for start, stop in self.zones]


def make_partition(L: int, zone_size: int) -> ZonePartition:
    """Consecutive blocks of ``zone_size``; the final zone takes the remainder."""
    if L < 1:
        raise InvalidDimensionError(f"L must be >= 1, got {L}")
    if zone_size < 1:
        raise InvalidDimensionError(f"zone_size must be >= 1, got {zone_size}")
    zones = tuple(
        (start, min(start + zone_size, L)) for start in range(0, L, zone_size)
    )
    return ZonePartition(zones=zones, zone_size=zone_size)


def zone_log_weights(log_lik: np.ndarray, partition: ZonePartition) -> np.ndarray:
    """Sum per-locus log-likelihoods within each zone: (M, L) -> (M, J)."""
    return np.stack([log_lik[:, z].sum(axis=1) for z in partition.slices()], axis=1)


def block_step(
    prior: np.ndarray,
    y: np.ndarray,
    partition: ZonePartition,
    m: ModelSpec,
    rng: Generator,
) -> np.ndarray:
    """One block-filter step: progress, weight per zone, stitch.

    For each output particle and zone, a source index is drawn
    independently from the zone's normalized weights, and the zone's values
    are copied jointly from that source.
    """
    if partition.locus_count != m.locus_count:
        raise InvalidDimensionError("partition does not cover the model's loci")
    progressed = progress_sample(prior, m, rng)
    log_lik = log_likelihood_matrix(y, progressed, m)
    M = progressed.shape[0]
    out = np.empty_like(progressed)
    for j, z in enumerate(partition.slices()):
        log_w = log_lik[:, z].sum(axis=1)
        try:
            weights = normalize_log_weights(log_w)
        except DegenerateLikelihoodError as exc:
            raise DegenerateLikelihoodError(
                f"zone {j} (loci {z.start}..{z.stop - 1}) weights underflowed"
            ) from exc
        idx = multinomial_indices(weights, M, rng)
        out[:, z] = progressed[idx, z]
    return out


def block_filter(
    observations: np.ndarray,
    partition: ZonePartition,
    m: ModelSpec,
    M: int,
    rng: Generator,
) -> list[np.ndarray]:
    ensemble = sample_initial(m, rng, size=M)
    out = []
    for y in np.atleast_2d(observations):
        ensemble = block_step(ensemble, y, partition, m, rng)
        out.append(ensemble)
    return out
