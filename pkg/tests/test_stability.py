"""Stability scoring: pair-mean oracles, exhaustive Monte Carlo reference,
chance correction formula, and the resolution sweep."""

import itertools
import math

import numpy as np
import pytest
import scipy.sparse as sp

from commap.detect import consensus
from commap.errors import NumericalError
from commap.stability import (
    SweepPoint,
    community_stability,
    corrected_stability,
    expected_stability,
    sample_expected_stability,
    score_communities,
    score_consensus,
    select_resolution,
    sweep,
)
from helpers import graph_from_dense, random_sym_csr, two_cliques


def dense_pair_mean(dense, members):
    pairs = list(itertools.combinations(sorted(members), 2))
    return sum(dense[i, j] for i, j in pairs) / len(pairs)


def exhaustive_expected(dense, n, c):
    subsets = list(itertools.combinations(range(n), c))
    return sum(dense_pair_mean(dense, s) for s in subsets) / len(subsets)


def test_community_stability_matches_dense_oracle():
    m = random_sym_csr(20, 0.3, 1)
    m.data[:] = np.linspace(0.1, 1.0, m.data.size)
    m = ((m + m.T) / 2).tocsr()  # keep it symmetric after reweighting
    dense = m.toarray()
    rng = np.random.default_rng(2)
    for _ in range(15):
        c = int(rng.integers(2, 8))
        members = list(map(int, rng.choice(20, size=c, replace=False)))
        assert community_stability(members, m) == pytest.approx(
            dense_pair_mean(dense, members), abs=1e-12
        )


def test_community_stability_validation():
    m = sp.identity(5, format="csr")
    with pytest.raises(ValueError, match="at least 2"):
        community_stability([1], m)
    with pytest.raises(ValueError, match="distinct"):
        community_stability([1, 1], m)
    with pytest.raises(ValueError, match="range"):
        community_stability([3, 7], m)


def test_expected_stability_matches_exhaustive_mean():
    # small enough to enumerate every subset exactly
    m = random_sym_csr(10, 0.4, 3)
    m.data[:] = 0.25 + 0.5 * np.arange(m.data.size) / m.data.size
    m = ((m + m.T) / 2).tocsr()
    dense = m.toarray()
    for c in (2, 3, 4):
        exact = exhaustive_expected(dense, 10, c)
        mean, stderr = sample_expected_stability(c, m, samples=20000, seed=5)
        assert abs(mean - exact) <= max(4 * stderr, 1e-12)
    # the exhaustive mean is size-independent: every unordered pair is
    # equally likely inside a uniform random subset of any size
    global_mean = dense_pair_mean(dense, range(10))
    for c in (2, 3, 4, 7):
        assert exhaustive_expected(dense, 10, c) == pytest.approx(global_mean, abs=1e-12)


def test_expected_stability_full_size_is_exact():
    m = random_sym_csr(8, 0.5, 4)
    dense = m.toarray()
    mean, stderr = sample_expected_stability(8, m, samples=10, seed=0)
    assert stderr == 0.0
    assert mean == pytest.approx(dense_pair_mean(dense, range(8)), abs=1e-15)


def test_expected_stability_validation():
    m = sp.identity(6, format="csr")
    for c in (1, 7):
        with pytest.raises(ValueError, match="community size"):
            sample_expected_stability(c, m)
    with pytest.raises(ValueError, match="samples"):
        sample_expected_stability(3, m, samples=0)
    assert expected_stability(3, m, samples=50, seed=1) == sample_expected_stability(
        3, m, samples=50, seed=1
    )[0]


def test_corrected_stability_formula_and_boundaries():
    rng = np.random.default_rng(6)
    for _ in range(500):
        e = float(rng.uniform(0.0, 0.999))
        s = float(rng.uniform(0.0, 1.0))
        want = (s - e) / (1.0 - e)
        assert corrected_stability(s, e) == pytest.approx(want, abs=1e-12)
    # boundary cases are exact, not approximate
    for e in (0.0, 0.3, 0.875):
        assert corrected_stability(1.0, e) == 1.0
        assert corrected_stability(e, e) == 0.0
    assert corrected_stability(0.1, 0.4) < 0.0
    with pytest.raises(NumericalError, match="degenerate"):
        corrected_stability(0.5, 1.0)
    with pytest.raises(NumericalError, match="degenerate"):
        corrected_stability(0.5, 1.0 - 1e-12)


def test_constant_matrix_scores_zero_corrected():
    n = 12
    dense = np.full((n, n), 0.7)
    np.fill_diagonal(dense, 0.0)
    m = sp.csr_matrix(dense)
    nodes = [f"n{i:02d}" for i in range(n)]
    reports = score_communities([nodes[:5], nodes[5:]], nodes, m, min_members=2, samples=200, seed=0)
    for r in reports:
        assert r.stability == pytest.approx(0.7, abs=1e-12)
        assert r.expected_stability == pytest.approx(0.7, abs=1e-12)
        assert r.corrected_stability == pytest.approx(0.0, abs=1e-12)


def test_fully_coassigned_block_scores_one():
    # a 13-node block of ones inside a 30-node matrix: stability exactly 1.0,
    # corrected exactly 1.0 regardless of the sampled expectation
    n, block = 30, 13
    dense = np.zeros((n, n))
    dense[:block, :block] = 1.0
    np.fill_diagonal(dense, 0.0)
    m = sp.csr_matrix(dense)
    nodes = [f"n{i:02d}" for i in range(n)]
    reports = score_communities([nodes[:block]], nodes, m, min_members=10, samples=500, seed=3)
    assert len(reports) == 1
    assert reports[0].stability == 1.0
    assert reports[0].corrected_stability == 1.0
    assert reports[0].negative is False


def test_score_communities_floor_and_ids():
    m = sp.csr_matrix(0.5 * (np.ones((9, 9)) - np.eye(9)))
    nodes = [f"n{i}" for i in range(9)]
    communities = [nodes[:2], nodes[2:5], nodes[5:9]]
    reports = score_communities(communities, nodes, m, min_members=3, samples=50, seed=0)
    assert [r.community_id for r in reports] == [1, 2]
    assert [r.size for r in reports] == [3, 4]
    assert all(r.mc_samples == 50 for r in reports)
    # min_members below 2 still cannot score singleton communities
    reports = score_communities([nodes[:1], nodes[1:]], nodes, m, min_members=0, samples=50, seed=0)
    assert [r.community_id for r in reports] == [1]


def test_same_size_communities_share_expectation():
    m = random_sym_csr(16, 0.4, 7)
    m.data[:] = 0.5
    nodes = [f"n{i:02d}" for i in range(16)]
    reports = score_communities(
        [nodes[:4], nodes[4:8], nodes[8:12]], nodes, m, min_members=2, samples=300, seed=9
    )
    assert len({r.expected_stability for r in reports}) == 1
    assert len({r.expected_stderr for r in reports}) == 1


def test_positional_relabeling_keeps_scores():
    # scores depend on positions in the matrix, not on the id strings
    m = random_sym_csr(10, 0.5, 8)
    m.data[:] = 0.6
    a_nodes = [f"a{i}" for i in range(10)]
    b_nodes = [f"b{i}" for i in range(10)]
    ra = score_communities([a_nodes[:5]], a_nodes, m, min_members=2, samples=100, seed=4)
    rb = score_communities([b_nodes[:5]], b_nodes, m, min_members=2, samples=100, seed=4)
    assert ra[0].stability == rb[0].stability
    assert ra[0].expected_stability == rb[0].expected_stability
    assert ra[0].corrected_stability == rb[0].corrected_stability


def test_score_consensus_uses_first_ensemble_matrix():
    # detector noisy on the raw graph, unanimous on the recursion graph; if
    # scoring used the final matrix every community would score exactly 1.0
    def method(graph, resolution, seed):
        if graph.weights.size == 12:  # the complete input graph, not a recursion graph
            if seed % 3 == 0:
                return np.array([0, 1, 1, 1])
            return np.array([0, 0, 1, 1])
        return np.zeros(graph.n, dtype=np.int64)

    g = graph_from_dense(np.ones((4, 4)) - np.eye(4))
    res = consensus(g, method=method, runs=3, tau=0.5, seed=0)
    assert res.converged and res.iterations > 1
    reports = score_consensus(res, min_members=2, samples=100, seed=0)
    assert len(reports) == 1
    want = community_stability([res.nodes.index(m) for m in res.communities[0]], res.matrix)
    assert reports[0].stability == want
    assert reports[0].stability < 1.0


def test_sweep_points_reproduce_standalone_runs():
    g = graph_from_dense(two_cliques(8))
    resolutions = [0.5, 1.0, 2.0]
    points = sweep(g, resolutions, runs=8, tau=0.5, min_members=3, samples=200, seed=6)
    assert [p.resolution for p in points] == resolutions
    for p in points:
        res = consensus(g, resolution=p.resolution, runs=8, tau=0.5, seed=6)
        reports = score_consensus(res, min_members=3, samples=200, seed=6)
        want = sum(r.corrected_stability for r in reports) / len(reports)
        assert p.mean_corrected_stability == want
        assert p.community_count == len(reports)


def test_sweep_nan_when_no_scorable_community():
    g = graph_from_dense(two_cliques(4))
    points = sweep(g, [1.0], runs=4, tau=0.5, min_members=50, samples=50, seed=0)
    assert math.isnan(points[0].mean_corrected_stability)
    assert points[0].community_count == 0
    with pytest.raises(NumericalError, match="min_members"):
        select_resolution(points)
    with pytest.raises(ValueError, match="nonempty"):
        sweep(g, [], runs=4)


def test_select_resolution_argmax_and_ties():
    pts = [
        SweepPoint(0.5, 0.40, 3),
        SweepPoint(1.0, float("nan"), 0),
        SweepPoint(1.5, 0.75, 2),
        SweepPoint(2.0, 0.75, 5),
        SweepPoint(3.0, 0.10, 1),
    ]
    best = select_resolution(pts)
    assert best.resolution == 1.5  # argmax, earliest on ties, NaN skipped
    assert best == max(
        (p for p in pts if not math.isnan(p.mean_corrected_stability)),
        key=lambda p: p.mean_corrected_stability,
    )
