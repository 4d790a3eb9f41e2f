"""Stochastic community detection with consensus clustering.

A single detector run (seeded Louvain by default, asynchronous label
propagation as the alternative) is noisy: node visit order changes the local
optimum. Consensus clustering runs the detector many times, records how often
each node pair lands in the same community (the consensus matrix), thresholds
that matrix at tau, and re-clusters the resulting graph until all runs agree.
Nodes isolated by the threshold drop out as unassigned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from commap import kernels
from commap.errors import DataError
from commap.network import Graph

DEFAULT_RUNS = 100
DEFAULT_TAU = 0.5
DEFAULT_RESOLUTION = 1.0
MAX_CONSENSUS_ITERATIONS = 10

MethodFn = Callable[[Graph, float, int], np.ndarray]


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber labels to 0..k-1 in order of first appearance.

    Canonical form makes partition equality plain array equality.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        return labels.copy()
    _, first_idx, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first_idx))
    return rank[inverse].astype(np.int64)


def louvain(graph: Graph, resolution: float = DEFAULT_RESOLUTION, seed: int = 0) -> np.ndarray:
    """One Louvain run; returns canonical community labels per node index."""
    if graph.n == 0:
        raise DataError("cannot detect communities on an empty graph")
    if resolution <= 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    return kernels.louvain_labels(
        graph.indptr, graph.indices, graph.weights, float(resolution), int(seed)
    )


def label_propagation(graph: Graph, seed: int = 0) -> np.ndarray:
    """One asynchronous weighted label propagation run (canonical labels)."""
    if graph.n == 0:
        raise DataError("cannot detect communities on an empty graph")
    return kernels.labelprop_labels(graph.indptr, graph.indices, graph.weights, int(seed))


METHODS = ("louvain", "label_propagation")


def _resolve_method(method: str | MethodFn) -> MethodFn:
    if callable(method):
        return method
    if method == "louvain":
        return lambda g, res, s: louvain(g, res, s)
    if method in ("label_propagation", "labelprop"):
        return lambda g, res, s: label_propagation(g, s)
    raise ValueError(f"unknown detection method {method!r}")


def coassignment_matrix(
    partitions: Sequence[np.ndarray], node_index: np.ndarray, n: int
) -> sp.csr_matrix:
    """Fraction of partitions assigning each node pair to one community.

    partitions are label arrays over the same node subset; node_index maps
    subset positions to global node indices, so the returned n x n matrix is
    aligned to the full graph. The trivial diagonal is omitted.
    """
    runs = len(partitions)
    if runs == 0:
        raise ValueError("need at least one partition")
    m = node_index.shape[0]
    # horizontal stack of one-hot membership indicators, one block per run:
    # the Gram matrix of the stack is the co-assignment count matrix
    rows = np.tile(node_index, runs)
    cols = np.empty(m * runs, dtype=np.int64)
    offset = 0
    for r, labels in enumerate(partitions):
        k = int(labels.max()) + 1 if m else 0
        cols[r * m : (r + 1) * m] = labels + offset
        offset += k
    data = np.ones(m * runs, dtype=np.float64)
    indicator = sp.csr_matrix((data, (rows, cols)), shape=(n, max(offset, 1)))
    counts = (indicator @ indicator.T).tocsr()
    counts.setdiag(0.0)
    counts.eliminate_zeros()
    counts.data /= runs
    counts.sort_indices()
    return counts


@dataclass
class ConsensusResult:
    """Outcome of consensus clustering over one graph.

    labels holds the final community index per graph node (-1 when
    unassigned). communities lists member ids, largest community first.
    matrix is the co-assignment matrix of the first ensemble (the one run on
    the input graph itself); final_matrix is the co-assignment matrix of the
    last ensemble before agreement. Both are aligned to graph.nodes.
    """

    nodes: tuple[str, ...]
    labels: np.ndarray
    communities: list[list[str]]
    unassigned: list[str]
    matrix: sp.csr_matrix
    final_matrix: sp.csr_matrix
    converged: bool
    iterations: int
    runs: int
    tau: float
    resolution: float
    method: str


def _order_communities(
    nodes: Sequence[str], labels: np.ndarray
) -> tuple[np.ndarray, list[list[str]], list[str]]:
    """Relabel communities by (size desc, smallest member id) and split members."""
    groups: dict[int, list[int]] = {}
    unassigned: list[str] = []
    for i, lab in enumerate(labels):
        if lab < 0:
            unassigned.append(nodes[i])
        else:
            groups.setdefault(int(lab), []).append(i)
    ordered = sorted(
        groups.values(), key=lambda idx: (-len(idx), min(nodes[i] for i in idx))
    )
    out = np.full(len(labels), -1, dtype=np.int64)
    communities: list[list[str]] = []
    for new_label, idx in enumerate(ordered):
        for i in idx:
            out[i] = new_label
        communities.append(sorted(nodes[i] for i in idx))
    return out, communities, sorted(unassigned)


def _modal_partition(partitions: list[np.ndarray]) -> np.ndarray:
    """Most frequent canonical partition; earliest first occurrence wins ties."""
    counts: dict[bytes, int] = {}
    first: dict[bytes, int] = {}
    for pos, labels in enumerate(partitions):
        key = labels.tobytes()
        counts[key] = counts.get(key, 0) + 1
        first.setdefault(key, pos)
    best = max(counts, key=lambda k: (counts[k], -first[k]))
    return partitions[first[best]]


def consensus(
    graph: Graph,
    method: str | MethodFn = "louvain",
    resolution: float = DEFAULT_RESOLUTION,
    runs: int = DEFAULT_RUNS,
    tau: float = DEFAULT_TAU,
    seed: int = 0,
    max_iterations: int = MAX_CONSENSUS_ITERATIONS,
    seeds: Sequence[int] | None = None,
) -> ConsensusResult:
    """Consensus clustering: repeat detection, threshold co-assignments, recurse.

    Every ensemble (the initial one and each recursion on a thresholded
    consensus graph) uses seeds seed .. seed+runs-1, so results depend only on
    (graph, parameters, seed). An explicit seeds sequence (length runs)
    overrides that schedule, again for every ensemble. If the ensembles still
    disagree after max_iterations, the most frequent partition of the last
    ensemble is returned with converged=False.
    """
    if graph.n == 0:
        raise DataError("cannot run consensus clustering on an empty graph")
    if runs < 2:
        raise ValueError(f"runs must be >= 2, got {runs}")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie strictly between 0 and 1, got {tau}")
    if resolution <= 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    if seeds is not None and len(seeds) != runs:
        raise ValueError(f"seeds override must have length {runs}, got {len(seeds)}")
    if max_iterations < 1:
        raise ValueError(f"max_iterations must be >= 1, got {max_iterations}")
    run_fn = _resolve_method(method)
    method_name = method if isinstance(method, str) else getattr(method, "__name__", "custom")

    n = graph.n
    current = graph
    active = np.arange(n, dtype=np.int64)
    full_labels = np.full(n, -1, dtype=np.int64)
    initial_matrix: sp.csr_matrix | None = None
    final_matrix: sp.csr_matrix | None = None
    converged = False
    iterations = 0

    for k in range(max_iterations):
        iterations = k + 1
        partitions = []
        for i in range(runs):
            run_seed = int(seeds[i]) if seeds is not None else seed + i
            partitions.append(canonical_labels(run_fn(current, resolution, run_seed)))
        matrix = coassignment_matrix(partitions, active, n)
        if k == 0:
            initial_matrix = matrix
        final_matrix = matrix
        if all(np.array_equal(partitions[0], p) for p in partitions[1:]):
            full_labels[active] = partitions[0]
            converged = True
            break
        if k == max_iterations - 1:
            full_labels[active] = _modal_partition(partitions)
            break
        # threshold: keep co-assignment >= tau among active nodes, drop isolates
        sub = matrix[active][:, active].tocsr()
        sub.data[sub.data < tau] = 0.0
        sub.eliminate_zeros()
        keep = np.diff(sub.indptr) > 0
        if not keep.any():
            # every node isolated: nothing left to cluster, all unassigned
            converged = True
            break
        survivors = np.flatnonzero(keep)
        sub = sub[survivors][:, survivors].tocsr()
        sub.sort_indices()
        active = active[survivors]
        current = Graph(
            [graph.nodes[i] for i in active],
            sub.indptr.astype(np.int64),
            sub.indices.astype(np.int64),
            sub.data.astype(np.float64),
        )

    labels, communities, unassigned = _order_communities(graph.nodes, full_labels)
    assert initial_matrix is not None and final_matrix is not None
    return ConsensusResult(
        nodes=graph.nodes,
        labels=labels,
        communities=communities,
        unassigned=unassigned,
        matrix=initial_matrix,
        final_matrix=final_matrix,
        converged=converged,
        iterations=iterations,
        runs=runs,
        tau=tau,
        resolution=resolution,
        method=method_name,
    )
