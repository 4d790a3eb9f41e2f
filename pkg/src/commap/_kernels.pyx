# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled kernels: Louvain local moves, label propagation, pair-mean sampling.

Statement-for-statement mirror of commap._kernels_py; both use the same
splitmix64 stream and the same double-arithmetic order, so outputs are
bit-identical (the extension is compiled with -ffp-contract=off). Keep the
two modules in sync when editing.
"""

import numpy as np

cimport cython

BACKEND = "compiled"

ctypedef unsigned long long u64

cdef u64 _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef u64 _MIX1 = 0xBF58476D1CE4E5B9ULL
cdef u64 _MIX2 = 0x94D049BB133111EBULL
cdef u64 _STREAM = 0xD1B54A32D192ED03ULL


cdef inline u64 _next64(u64* state) noexcept nogil:
    cdef u64 z
    state[0] = state[0] + _GOLDEN
    z = state[0]
    z = (z ^ (z >> 30)) * _MIX1
    z = (z ^ (z >> 27)) * _MIX2
    return z ^ (z >> 31)


def splitmix64_stream(seed, count):
    """Return `count` splitmix64 outputs for `seed` (test/benchmark helper)."""
    cdef u64 state = <u64> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t i
    out = np.empty(count, dtype=np.uint64)
    cdef u64[::1] o = out
    for i in range(count):
        o[i] = _next64(&state)
    return out


cdef void _shuffle(long long[::1] order, Py_ssize_t n, u64* state) noexcept nogil:
    cdef Py_ssize_t i
    cdef u64 j
    cdef long long tmp
    for i in range(n - 1, 0, -1):
        j = _next64(state) % (<u64> (i + 1))
        tmp = order[i]
        order[i] = order[<Py_ssize_t> j]
        order[<Py_ssize_t> j] = tmp


cdef Py_ssize_t _renumber(long long[::1] labels, Py_ssize_t n):
    """In-place contiguous renumbering by first appearance; returns count."""
    cdef dict mapping = {}
    cdef Py_ssize_t i
    cdef object new
    for i in range(n):
        new = mapping.get(labels[i])
        if new is None:
            new = len(mapping)
            mapping[labels[i]] = new
        labels[i] = new
    return len(mapping)


@cython.cdivision(True)
cdef bint _one_level(Py_ssize_t n, long long[::1] indptr, long long[::1] indices,
                     double[::1] weights, double[::1] selfw, double gamma,
                     u64* state, long long[::1] com):
    cdef double s, two_m, ku, best_gain, gain
    cdef Py_ssize_t u, e, idx, t, ntouched, moved
    cdef long long c, cu, best_c
    cdef bint moved_any = False

    cdef double[::1] k = np.empty(n, dtype=np.float64)
    cdef double[::1] tot = np.empty(n, dtype=np.float64)
    cdef long long[::1] order = np.empty(n, dtype=np.int64)
    cdef double[::1] neigh_w = np.zeros(n, dtype=np.float64)
    cdef long long[::1] touched = np.empty(n, dtype=np.int64)

    for u in range(n):
        s = 2.0 * selfw[u]
        for e in range(indptr[u], indptr[u + 1]):
            s = s + weights[e]
        k[u] = s
    two_m = 0.0
    for u in range(n):
        two_m = two_m + k[u]

    for u in range(n):
        com[u] = u
        tot[u] = k[u]
    if two_m == 0.0:
        return False

    for u in range(n):
        order[u] = u
    _shuffle(order, n, state)

    while True:
        moved = 0
        for idx in range(n):
            u = <Py_ssize_t> order[idx]
            cu = com[u]
            ntouched = 0
            for e in range(indptr[u], indptr[u + 1]):
                c = com[indices[e]]
                if neigh_w[c] == 0.0:
                    touched[ntouched] = c
                    ntouched += 1
                neigh_w[c] = neigh_w[c] + weights[e]
            ku = k[u]
            tot[cu] -= ku
            best_c = cu
            best_gain = neigh_w[cu] - gamma * tot[cu] * ku / two_m
            for t in range(ntouched):
                c = touched[t]
                gain = neigh_w[c] - gamma * tot[c] * ku / two_m
                if gain > best_gain:
                    best_gain = gain
                    best_c = c
            tot[best_c] += ku
            com[u] = best_c
            if best_c != cu:
                moved += 1
            for t in range(ntouched):
                neigh_w[touched[t]] = 0.0
        if moved > 0:
            moved_any = True
        else:
            break
    return moved_any


def louvain_labels(indptr, indices, weights, gamma, seed):
    """Deterministic seeded Louvain; returns int64 community labels.

    gamma multiplies the null-model term of weighted modularity. The seed
    drives node visit order only.
    """
    cdef long long[::1] cur_indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef long long[::1] cur_indices = np.ascontiguousarray(indices, dtype=np.int64)
    cdef double[::1] cur_weights = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = cur_indptr.shape[0] - 1
    cdef Py_ssize_t cur_n = n
    cdef u64 state = <u64> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef double g = gamma

    labels_arr = np.arange(n, dtype=np.int64)
    cdef long long[::1] labels = labels_arr
    selfw_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] cur_selfw = selfw_arr

    cdef long long[::1] com, level_map
    cdef Py_ssize_t nc, i
    cdef bint moved

    while True:
        com_arr = np.empty(cur_n, dtype=np.int64)
        com = com_arr
        moved = _one_level(cur_n, cur_indptr, cur_indices, cur_weights,
                           cur_selfw, g, &state, com)
        if not moved:
            break
        nc, new_indptr, new_indices, new_weights, new_selfw = _aggregate(
            cur_n, cur_indptr, cur_indices, cur_weights, cur_selfw, com)
        level_map = com
        for i in range(n):
            labels[i] = level_map[labels[i]]
        cur_indptr = new_indptr
        cur_indices = new_indices
        cur_weights = new_weights
        cur_selfw = new_selfw
        if nc == cur_n:
            break
        cur_n = nc
    _renumber(labels, n)
    return labels_arr


cdef _aggregate(Py_ssize_t n, long long[::1] indptr, long long[::1] indices,
                double[::1] weights, double[::1] selfw, long long[::1] com):
    """Collapse communities into nodes; renumbers `com` in place (level map).

    Row weights accumulate in (member node order, edge order), then columns
    are sorted; the sort permutes finished sums only, so float results do not
    depend on the sort algorithm.
    """
    cdef Py_ssize_t nc = _renumber(com, n)
    cdef Py_ssize_t u, c, e, mi, t, p, nedges, ntouched
    cdef long long v, cv, key
    cdef double self_acc

    counts_arr = np.zeros(nc, dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    for u in range(n):
        counts[com[u]] += 1
    starts_arr = np.zeros(nc + 1, dtype=np.int64)
    cdef long long[::1] starts = starts_arr
    for c in range(nc):
        starts[c + 1] = starts[c] + counts[c]
    members_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] members = members_arr
    fill_arr = starts_arr[:nc].copy()
    cdef long long[::1] fill = fill_arr
    for u in range(n):
        c = <Py_ssize_t> com[u]
        members[fill[c]] = u
        fill[c] += 1

    new_selfw_arr = np.zeros(nc, dtype=np.float64)
    cdef double[::1] new_selfw = new_selfw_arr
    new_indptr_arr = np.zeros(nc + 1, dtype=np.int64)
    cdef long long[::1] new_indptr = new_indptr_arr
    cap = indices.shape[0]
    new_indices_arr = np.empty(cap, dtype=np.int64)
    cdef long long[::1] new_indices = new_indices_arr
    new_weights_arr = np.empty(cap, dtype=np.float64)
    cdef double[::1] new_weights = new_weights_arr

    acc_arr = np.zeros(nc, dtype=np.float64)
    cdef double[::1] acc = acc_arr
    touched_arr = np.empty(nc, dtype=np.int64)
    cdef long long[::1] touched = touched_arr

    nedges = 0
    for c in range(nc):
        self_acc = 0.0
        ntouched = 0
        for mi in range(starts[c], starts[c + 1]):
            u = <Py_ssize_t> members[mi]
            self_acc = self_acc + selfw[u]
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                cv = com[v]
                if cv == c:
                    if v > u:
                        self_acc = self_acc + weights[e]
                else:
                    if acc[cv] == 0.0:
                        touched[ntouched] = cv
                        ntouched += 1
                    acc[cv] = acc[cv] + weights[e]
        new_selfw[c] = self_acc
        # insertion sort over ints: same result as any stable sort
        for t in range(1, ntouched):
            key = touched[t]
            p = t - 1
            while p >= 0 and touched[p] > key:
                touched[p + 1] = touched[p]
                p -= 1
            touched[p + 1] = key
        for t in range(ntouched):
            cv = touched[t]
            new_indices[nedges] = cv
            new_weights[nedges] = acc[cv]
            acc[cv] = 0.0
            nedges += 1
        new_indptr[c + 1] = nedges

    return (nc, new_indptr_arr, new_indices_arr[:nedges].copy(),
            new_weights_arr[:nedges].copy(), new_selfw_arr)


def labelprop_labels(indptr, indices, weights, seed, max_rounds=100):
    """Asynchronous weighted label propagation; deterministic per seed.

    Each round visits nodes in a fresh shuffled order; a node adopts the
    neighbor label with the largest total incident weight (ties: smallest
    label). Stops when a round changes nothing or after max_rounds.
    """
    cdef long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef long long[::1] ind = np.ascontiguousarray(indices, dtype=np.int64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    cdef u64 state = <u64> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t rounds = max_rounds

    labels_arr = np.arange(n, dtype=np.int64)
    cdef long long[::1] labels = labels_arr
    order_arr = np.arange(n, dtype=np.int64)
    cdef long long[::1] order = order_arr
    acc_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] acc = acc_arr
    touched_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] touched = touched_arr

    cdef Py_ssize_t r, idx, u, e, t, ntouched, changed
    cdef long long lab, best
    cdef double wv, best_w

    for r in range(rounds):
        _shuffle(order, n, &state)
        changed = 0
        for idx in range(n):
            u = <Py_ssize_t> order[idx]
            ntouched = 0
            for e in range(ip[u], ip[u + 1]):
                lab = labels[ind[e]]
                if acc[lab] == 0.0:
                    touched[ntouched] = lab
                    ntouched += 1
                acc[lab] = acc[lab] + w[e]
            best = labels[u]
            best_w = -1.0
            for t in range(ntouched):
                lab = touched[t]
                wv = acc[lab]
                if wv > best_w or (wv == best_w and lab < best):
                    best_w = wv
                    best = lab
            for t in range(ntouched):
                acc[touched[t]] = 0.0
            if best != labels[u]:
                labels[u] = best
                changed += 1
        if changed == 0:
            break
    _renumber(labels, n)
    return labels_arr


@cython.cdivision(True)
cdef double _pair_mean_sorted(long long[::1] indptr, long long[::1] indices,
                              double[::1] data, long long[::1] nodes,
                              Py_ssize_t c) noexcept nogil:
    cdef double total = 0.0
    cdef Py_ssize_t i, j
    cdef long long x, y, lo0, hi0, lo, hi, mid, v
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
    cdef long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef long long[::1] ind = np.ascontiguousarray(indices, dtype=np.int64)
    cdef double[::1] d = np.ascontiguousarray(data, dtype=np.float64)
    nodes_arr = np.sort(np.asarray(nodes, dtype=np.int64))
    cdef long long[::1] nd = nodes_arr
    return _pair_mean_sorted(ip, ind, d, nd, nd.shape[0])


def sample_pair_means(indptr, indices, data, n, c, samples, seed):
    """Per-sample mean pairwise values for `samples` random c-subsets of 0..n-1.

    Sample i draws from splitmix64 seeded with mix(seed, i), so results are
    independent of evaluation order. Draws are partial Fisher-Yates without
    replacement; each drawn set is sorted before the pair scan.
    """
    cdef long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef long long[::1] ind = np.ascontiguousarray(indices, dtype=np.int64)
    cdef double[::1] d = np.ascontiguousarray(data, dtype=np.float64)
    cdef Py_ssize_t nn = int(n)
    cdef Py_ssize_t cc = int(c)
    cdef Py_ssize_t ns = int(samples)
    cdef u64 base = <u64> (int(seed) & 0xFFFFFFFFFFFFFFFF)

    perm_arr = np.arange(nn, dtype=np.int64)
    cdef long long[::1] perm = perm_arr
    swaps_arr = np.empty(cc, dtype=np.int64)
    cdef long long[::1] swaps = swaps_arr
    drawn_arr = np.empty(cc, dtype=np.int64)
    cdef long long[::1] drawn = drawn_arr
    out_arr = np.empty(ns, dtype=np.float64)
    cdef double[::1] out = out_arr

    cdef Py_ssize_t s, i, j, t, p
    cdef u64 state, seed_state
    cdef long long tmp, key

    for s in range(ns):
        seed_state = base + (<u64> s) * _STREAM
        state = _next64(&seed_state)
        for i in range(cc):
            j = i + <Py_ssize_t> (_next64(&state) % (<u64> (nn - i)))
            swaps[i] = j
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
        for i in range(cc):
            drawn[i] = perm[i]
        # undo the swaps so every sample draws from the identity permutation
        for i in range(cc - 1, -1, -1):
            j = <Py_ssize_t> swaps[i]
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
        # insertion sort (ints)
        for t in range(1, cc):
            key = drawn[t]
            p = t - 1
            while p >= 0 and drawn[p] > key:
                drawn[p + 1] = drawn[p]
                p -= 1
            drawn[p + 1] = key
        out[s] = _pair_mean_sorted(ip, ind, d, drawn, cc)
    return out_arr
