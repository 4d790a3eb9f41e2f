"""Shared test utilities: small graph builders and brute-force oracles.

Everything here is intentionally naive (dense matrices, full enumeration) so
tests check the package against independent re-derivations, not against
itself.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from commap.network import Graph


def random_sym_csr(n: int, density: float, seed: int, weighted: bool = False) -> sp.csr_matrix:
    """Random symmetric CSR matrix with zero diagonal and positive entries."""
    rng = np.random.default_rng(seed)
    upper = sp.triu(sp.random(n, n, density=density, random_state=rng, dtype=np.float64), k=1)
    if weighted:
        upper.data = 1.0 + np.floor(upper.data * 5.0)
    else:
        upper.data[:] = 1.0
    sym = (upper + upper.T).tocsr()
    sym.sort_indices()
    return sym


def graph_from_dense(adj: np.ndarray, names: list[str] | None = None) -> Graph:
    """Build a Graph from a dense symmetric adjacency matrix."""
    n = adj.shape[0]
    if names is None:
        names = [f"n{i:03d}" for i in range(n)]
    edges = {}
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i, j] != 0.0:
                edges[(names[i], names[j])] = float(adj[i, j])
    return Graph.from_edge_weights(names, edges)


def graph_of(edges: dict) -> Graph:
    """Build a Graph whose node set is exactly the edge endpoints."""
    nodes = {a for pair in edges for a in pair}
    return Graph.from_edge_weights(sorted(nodes), edges)


def two_cliques(size: int, bridge: bool = True) -> np.ndarray:
    """Two disjoint cliques of `size` nodes, optionally joined by one edge."""
    n = 2 * size
    adj = np.zeros((n, n))
    for block in (range(size), range(size, n)):
        for i in block:
            for j in block:
                if i != j:
                    adj[i, j] = 1.0
    if bridge:
        adj[0, size] = adj[size, 0] = 1.0
    return adj


def modularity(adj: np.ndarray, labels: np.ndarray, gamma: float = 1.0) -> float:
    """Newman modularity with resolution gamma, dense brute force."""
    k = adj.sum(axis=1)
    two_m = k.sum()
    same = np.asarray(labels)[:, None] == np.asarray(labels)[None, :]
    return float((adj[same].sum() - gamma * np.outer(k, k)[same].sum() / two_m) / two_m)


def all_partitions(items: list):
    """Yield every set partition of `items` (use only for len <= 8)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in all_partitions(rest):
        for i in range(len(smaller)):
            yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1 :]
        yield [[first]] + smaller


def best_partition_modularity(adj: np.ndarray, gamma: float = 1.0) -> tuple[float, list]:
    """Exhaustive-search optimum of modularity over all partitions."""
    n = adj.shape[0]
    best_q, best_p = -np.inf, None
    for parts in all_partitions(list(range(n))):
        labels = np.empty(n, dtype=np.int64)
        for lab, members in enumerate(parts):
            labels[members] = lab
        q = modularity(adj, labels, gamma)
        if q > best_q:
            best_q, best_p = q, parts
    return best_q, best_p


def grouping(labels) -> set[frozenset]:
    """Label-invariant view of a partition: the set of member groups."""
    groups: dict = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, set()).add(i)
    return {frozenset(g) for g in groups.values()}
