"""Pure-Python kernels: Louvain local moves, label propagation, pair-mean sampling.

This module is the fallback used when the compiled extension is unavailable
(see :mod:`commap.kernels`). The compiled module mirrors these routines
statement by statement; both draw randomness from the same splitmix64 stream
and perform double arithmetic in the same order, so their outputs are
bit-identical. Keep the two in sync when editing.

All graph inputs are symmetric CSR arrays (indptr, indices, weights) with no
self-loops and strictly positive weights. Labels are renumbered contiguously
by first appearance in node order, so equal groupings serialize equally.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_MASK64 = 0xFFFFFFFFFFFFFFFF


def splitmix64_stream(seed, count):
    """Return `count` splitmix64 outputs for `seed` (test/benchmark helper)."""
    state = int(seed) & _MASK64
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        out.append(z ^ (z >> 31))
    return np.array(out, dtype=np.uint64)


def _next64(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _shuffle(order, state):
    # Fisher-Yates; modulo bias is irrelevant here, only determinism matters.
    for i in range(len(order) - 1, 0, -1):
        state, z = _next64(state)
        j = z % (i + 1)
        order[i], order[j] = order[j], order[i]
    return state


def _renumber(labels):
    mapping = {}
    out = [0] * len(labels)
    for i, lab in enumerate(labels):
        new = mapping.get(lab)
        if new is None:
            new = len(mapping)
            mapping[lab] = new
        out[i] = new
    return out


def _one_level(n, indptr, indices, weights, selfw, gamma, state):
    """One Louvain level: local moves until a full pass makes no move.

    Returns (labels, state, moved_any). Node visit order is shuffled once per
    level; passes repeat that order.
    """
    k = [0.0] * n
    for u in range(n):
        s = 2.0 * selfw[u]
        for e in range(indptr[u], indptr[u + 1]):
            s = s + weights[e]
        k[u] = s
    two_m = 0.0
    for u in range(n):
        two_m = two_m + k[u]

    com = list(range(n))
    tot = list(k)
    if two_m == 0.0:
        return com, state, False

    order = list(range(n))
    state = _shuffle(order, state)

    neigh_w = [0.0] * n
    touched = []
    moved_any = False
    while True:
        moved = 0
        for idx in range(n):
            u = order[idx]
            cu = com[u]
            for e in range(indptr[u], indptr[u + 1]):
                c = com[indices[e]]
                if neigh_w[c] == 0.0:
                    touched.append(c)
                neigh_w[c] = neigh_w[c] + weights[e]
            ku = k[u]
            tot[cu] -= ku
            best_c = cu
            best_gain = neigh_w[cu] - gamma * tot[cu] * ku / two_m
            for t in range(len(touched)):
                c = touched[t]
                gain = neigh_w[c] - gamma * tot[c] * ku / two_m
                if gain > best_gain:
                    best_gain = gain
                    best_c = c
            tot[best_c] += ku
            com[u] = best_c
            if best_c != cu:
                moved += 1
            for t in range(len(touched)):
                neigh_w[touched[t]] = 0.0
            touched.clear()
        if moved > 0:
            moved_any = True
        else:
            break
    return com, state, moved_any


def _aggregate(n, indptr, indices, weights, selfw, com):
    """Collapse communities into nodes; returns the induced CSR graph.

    Row weights accumulate in (member node order, edge order), then columns
    are sorted; the sort permutes finished sums only, so float results do not
    depend on the sort algorithm.
    """
    labels = _renumber(com)
    nc = 0
    for lab in labels:
        if lab + 1 > nc:
            nc = lab + 1

    counts = [0] * nc
    for u in range(n):
        counts[labels[u]] += 1
    starts = [0] * (nc + 1)
    for c in range(nc):
        starts[c + 1] = starts[c] + counts[c]
    members = [0] * n
    fill = list(starts[:nc])
    for u in range(n):
        c = labels[u]
        members[fill[c]] = u
        fill[c] += 1

    new_selfw = [0.0] * nc
    new_indptr = [0] * (nc + 1)
    new_indices = []
    new_weights = []
    acc = [0.0] * nc
    touched = []
    for c in range(nc):
        self_acc = 0.0
        for mi in range(starts[c], starts[c + 1]):
            u = members[mi]
            self_acc = self_acc + selfw[u]
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                cv = labels[v]
                if cv == c:
                    if v > u:
                        self_acc = self_acc + weights[e]
                else:
                    if acc[cv] == 0.0:
                        touched.append(cv)
                    acc[cv] = acc[cv] + weights[e]
        new_selfw[c] = self_acc
        touched.sort()
        for cv in touched:
            new_indices.append(cv)
            new_weights.append(acc[cv])
            acc[cv] = 0.0
        touched.clear()
        new_indptr[c + 1] = len(new_indices)

    return nc, new_indptr, new_indices, new_weights, new_selfw, labels


def louvain_labels(indptr, indices, weights, gamma, seed):
    """Deterministic seeded Louvain; returns int64 community labels.

    gamma multiplies the null-model term of weighted modularity. The seed
    drives node visit order only.
    """
    indptr = [int(x) for x in indptr]
    indices = [int(x) for x in indices]
    weights = [float(x) for x in weights]
    n = len(indptr) - 1
    labels = list(range(n))
    cur_n = n
    cur_indptr, cur_indices, cur_weights = indptr, indices, weights
    cur_selfw = [0.0] * n
    state = int(seed) & _MASK64
    while True:
        com, state, moved = _one_level(
            cur_n, cur_indptr, cur_indices, cur_weights, cur_selfw, gamma, state
        )
        if not moved:
            break
        nc, cur_indptr, cur_indices, cur_weights, cur_selfw, level_map = _aggregate(
            cur_n, cur_indptr, cur_indices, cur_weights, cur_selfw, com
        )
        for i in range(n):
            labels[i] = level_map[labels[i]]
        if nc == cur_n:
            break
        cur_n = nc
    return np.array(_renumber(labels), dtype=np.int64)


def labelprop_labels(indptr, indices, weights, seed, max_rounds=100):
    """Asynchronous weighted label propagation; deterministic per seed.

    Each round visits nodes in a fresh shuffled order; a node adopts the
    neighbor label with the largest total incident weight (ties: smallest
    label). Stops when a round changes nothing or after max_rounds.
    """
    indptr = [int(x) for x in indptr]
    indices = [int(x) for x in indices]
    weights = [float(x) for x in weights]
    n = len(indptr) - 1
    labels = list(range(n))
    order = list(range(n))
    state = int(seed) & _MASK64
    acc = [0.0] * n
    touched = []
    for _ in range(max_rounds):
        state = _shuffle(order, state)
        changed = 0
        for idx in range(n):
            u = order[idx]
            for e in range(indptr[u], indptr[u + 1]):
                lab = labels[indices[e]]
                if acc[lab] == 0.0:
                    touched.append(lab)
                acc[lab] = acc[lab] + weights[e]
            best = labels[u]
            best_w = -1.0
            for t in range(len(touched)):
                lab = touched[t]
                w = acc[lab]
                if w > best_w or (w == best_w and lab < best):
                    best_w = w
                    best = lab
            for t in range(len(touched)):
                acc[touched[t]] = 0.0
            touched.clear()
            if best != labels[u]:
                labels[u] = best
                changed += 1
        if changed == 0:
            break
    return np.array(_renumber(labels), dtype=np.int64)


def _pair_mean_sorted(indptr, indices, data, nodes):
    """Mean of M[x, y] over unordered pairs of `nodes` (ascending index order).

    Absent entries read as 0. Summation iterates pairs (i, j) with i < j in
    the sorted node order, so the value is a function of the node set.
    """
    c = len(nodes)
    total = 0.0
    for i in range(c - 1):
        x = nodes[i]
        lo0 = indptr[x]
        hi0 = indptr[x + 1]
        for j in range(i + 1, c):
            y = nodes[j]
            lo = lo0
            hi = hi0
            while lo < hi:
                mid = (lo + hi) >> 1
                v = indices[mid]
                if v < y:
                    lo = mid + 1
                elif v > y:
                    hi = mid
                else:
                    total = total + data[mid]
                    break
    return total / (c * (c - 1) / 2.0)


def pair_mean(indptr, indices, data, nodes):
    """Mean pairwise matrix value over a node index set (|nodes| >= 2)."""
    indptr = [int(x) for x in indptr]
    indices = [int(x) for x in indices]
    data = [float(x) for x in data]
    nodes = sorted(int(x) for x in nodes)
    return _pair_mean_sorted(indptr, indices, data, nodes)


def sample_pair_means(indptr, indices, data, n, c, samples, seed):
    """Per-sample mean pairwise values for `samples` random c-subsets of 0..n-1.

    Sample i draws from splitmix64 seeded with mix(seed, i), so results are
    independent of evaluation order. Draws are partial Fisher-Yates without
    replacement; each drawn set is sorted before the pair scan.
    """
    indptr = [int(x) for x in indptr]
    indices = [int(x) for x in indices]
    data = [float(x) for x in data]
    n = int(n)
    c = int(c)
    perm = list(range(n))
    swaps = [0] * c
    out = np.empty(samples, dtype=np.float64)
    base = int(seed) & _MASK64
    for s in range(samples):
        state, z = _next64((base + s * 0xD1B54A32D192ED03) & _MASK64)
        state = z
        for i in range(c):
            state, z = _next64(state)
            j = i + z % (n - i)
            swaps[i] = j
            perm[i], perm[j] = perm[j], perm[i]
        drawn = sorted(perm[:c])
        # undo the swaps so every sample draws from the identity permutation
        for i in range(c - 1, -1, -1):
            j = swaps[i]
            perm[i], perm[j] = perm[j], perm[i]
        out[s] = _pair_mean_sorted(indptr, indices, data, drawn)
    return out
