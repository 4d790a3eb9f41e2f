"""Chance-corrected stability scores for consensus communities.

A community's stability is the mean co-assignment score over its member
pairs. Because even random node sets score above zero on a dense
co-assignment matrix, the raw score is corrected against the expected score
of a same-sized uniformly random node set:

    corrected = (stability - expected) / (1 - expected)

The expectation is estimated by Monte Carlo (draw c nodes without
replacement, average their pairwise scores, repeat). Per-sample seeds derive
from (seed, sample index), so estimates are reproducible and independent of
evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from commap import kernels
from commap.detect import ConsensusResult, consensus
from commap.errors import NumericalError
from commap.network import Graph

DEFAULT_MC_SAMPLES = 10000
DEFAULT_MIN_MEMBERS = 10
DEGENERATE_EPS = 1e-9


@dataclass(frozen=True)
class StabilityReport:
    community_id: int
    size: int
    stability: float
    expected_stability: float
    expected_stderr: float
    corrected_stability: float
    mc_samples: int

    @property
    def negative(self) -> bool:
        """Below-chance communities are flagged in serialized reports."""
        return self.corrected_stability < 0.0


@dataclass(frozen=True)
class SweepPoint:
    resolution: float
    mean_corrected_stability: float
    community_count: int


def _csr_parts(matrix: sp.spmatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    csr = matrix.tocsr()
    csr.sort_indices()
    return (
        csr.indptr.astype(np.int64),
        csr.indices.astype(np.int64),
        csr.data.astype(np.float64),
    )


def community_stability(members: Sequence[int], matrix: sp.spmatrix) -> float:
    """Mean co-assignment score over all unordered pairs of member indices."""
    idx = np.asarray(sorted(int(i) for i in members), dtype=np.int64)
    if idx.size < 2:
        raise ValueError(f"community must have at least 2 members, got {idx.size}")
    if idx.size != np.unique(idx).size:
        raise ValueError("community members must be distinct")
    n = matrix.shape[0]
    if idx[0] < 0 or idx[-1] >= n:
        raise ValueError("member index out of range for the matrix")
    indptr, indices, data = _csr_parts(matrix)
    return kernels.pair_mean(indptr, indices, data, idx)


def sample_expected_stability(
    c: int,
    matrix: sp.spmatrix,
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte Carlo estimate (mean, standard error) of a random c-set's stability.

    c == n has a single possible draw, so the exact value is returned with
    zero standard error and no sampling.
    """
    n = matrix.shape[0]
    if not 2 <= c <= n:
        raise ValueError(f"community size must satisfy 2 <= c <= {n}, got {c}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if c == n:
        return community_stability(range(n), matrix), 0.0
    indptr, indices, data = _csr_parts(matrix)
    means = kernels.sample_pair_means(indptr, indices, data, n, c, samples, seed)
    mean = float(means.mean())
    stderr = float(means.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return mean, stderr


def expected_stability(
    c: int,
    matrix: sp.spmatrix,
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> float:
    return sample_expected_stability(c, matrix, samples, seed)[0]


def corrected_stability(stability: float, expected: float) -> float:
    """(stability - expected) / (1 - expected); exact at both boundaries."""
    if expected >= 1.0 - DEGENERATE_EPS:
        raise NumericalError(
            f"expected stability {expected!r} leaves a degenerate correction denominator"
        )
    return (stability - expected) / (1.0 - expected)


def score_communities(
    communities: Sequence[Sequence[str]],
    nodes: Sequence[str],
    matrix: sp.spmatrix,
    min_members: int = DEFAULT_MIN_MEMBERS,
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> list[StabilityReport]:
    """Score each community of size >= max(min_members, 2) against the matrix.

    The expectation depends only on community size, so it is sampled once per
    distinct size. community_id is the community's position in the input.
    """
    index = {a: i for i, a in enumerate(nodes)}
    indptr, indices, data = _csr_parts(matrix)
    floor = max(min_members, 2)
    expectation_cache: dict[int, tuple[float, float]] = {}
    reports: list[StabilityReport] = []
    for cid, members in enumerate(communities):
        c = len(members)
        if c < floor:
            continue
        idx = np.asarray(sorted(index[m] for m in members), dtype=np.int64)
        stab = kernels.pair_mean(indptr, indices, data, idx)
        if c not in expectation_cache:
            expectation_cache[c] = sample_expected_stability(c, matrix, samples, seed)
        exp, stderr = expectation_cache[c]
        reports.append(
            StabilityReport(
                community_id=cid,
                size=c,
                stability=stab,
                expected_stability=exp,
                expected_stderr=stderr,
                corrected_stability=corrected_stability(stab, exp),
                mc_samples=samples,
            )
        )
    return reports


def score_consensus(
    result: ConsensusResult,
    min_members: int = DEFAULT_MIN_MEMBERS,
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> list[StabilityReport]:
    """Score a consensus result against its first-ensemble co-assignment matrix.

    The first ensemble reflects detector variability on the input graph; later
    ensembles run on thresholded consensus graphs and agree by construction,
    which would score every surviving community as perfectly stable.
    """
    return score_communities(
        result.communities, result.nodes, result.matrix, min_members, samples, seed
    )


def sweep(
    graph: Graph,
    resolutions: Sequence[float],
    method: str = "louvain",
    runs: int = 100,
    tau: float = 0.5,
    min_members: int = DEFAULT_MIN_MEMBERS,
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> list[SweepPoint]:
    """Consensus-cluster the graph at each resolution and summarize stability.

    Every resolution uses the same base seed, so a sweep point reproduces a
    standalone consensus run at that resolution. Points with no community of
    size >= min_members carry mean NaN (they never win selection).
    """
    if not resolutions:
        raise ValueError("resolutions must be nonempty")
    points: list[SweepPoint] = []
    for resolution in resolutions:
        result = consensus(
            graph, method=method, resolution=resolution, runs=runs, tau=tau, seed=seed
        )
        reports = score_consensus(result, min_members=min_members, samples=samples, seed=seed)
        if reports:
            mean = sum(r.corrected_stability for r in reports) / len(reports)
        else:
            mean = float("nan")
        points.append(SweepPoint(float(resolution), mean, len(reports)))
    return points


def select_resolution(points: Sequence[SweepPoint]) -> SweepPoint:
    """Pick the sweep point with the highest mean corrected stability.

    NaN means never win; ties go to the earliest point in the list. A sweep
    with no scorable point at all is an error.
    """
    best: SweepPoint | None = None
    for point in points:
        if math.isnan(point.mean_corrected_stability):
            continue
        if best is None or point.mean_corrected_stability > best.mean_corrected_stability:
            best = point
    if best is None:
        raise NumericalError(
            "no sweep point produced a community large enough to score; "
            "lower min_members or adjust the resolution grid"
        )
    return best
