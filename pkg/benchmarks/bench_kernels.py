"""Compare the compiled kernel backend against the pure-Python fallback.

Every workload runs on both backends with identical inputs; results must be
bit-identical before a speedup is reported, so this doubles as an equivalence
check on realistic sizes.

    python3 benchmarks/bench_kernels.py [--nodes N] [--density D] [--repeat K]
"""

import argparse
import sys
import time

import numpy as np

from commap import _kernels_py

try:
    from commap import _kernels
except ImportError:
    _kernels = None


def random_graph(n, density, seed):
    """Symmetric zero-diagonal CSR parts with uniform positive weights."""
    rng = np.random.default_rng(seed)
    mask = np.triu(rng.random((n, n)) < density, k=1)
    weights = np.where(mask, rng.uniform(0.5, 2.0, (n, n)), 0.0)
    dense = weights + weights.T
    import scipy.sparse as sp

    csr = sp.csr_matrix(dense)
    csr.sort_indices()
    return csr.indptr, csr.indices, csr.data


def build_workloads(args):
    indptr, indices, data = random_graph(args.nodes, args.density, seed=1)
    edges = indices.size // 2
    samples = args.samples

    return [
        (
            f"splitmix64_stream({args.stream:,} draws)",
            lambda b: b.splitmix64_stream(9, args.stream),
        ),
        (
            f"louvain_labels({args.nodes} nodes, {edges} edges)",
            lambda b: b.louvain_labels(indptr, indices, data, 1.0, 4),
        ),
        (
            f"labelprop_labels({args.nodes} nodes, {edges} edges)",
            lambda b: b.labelprop_labels(indptr, indices, data, 4),
        ),
        (
            f"sample_pair_means(c=10, {samples:,} samples)",
            lambda b: b.sample_pair_means(
                indptr, indices, data, args.nodes, 10, samples, 2
            ),
        ),
    ]


def best_time(fn, repeat):
    result = fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return result, best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, default=600)
    parser.add_argument("--density", type=float, default=0.02)
    parser.add_argument("--samples", type=int, default=50_000)
    parser.add_argument("--stream", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    if _kernels is None:
        print("compiled backend unavailable; build the extension first", file=sys.stderr)
        return 1

    print(f"{'workload':<44} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for name, call in build_workloads(args):
        py_result, py_time = best_time(lambda: call(_kernels_py), args.repeat)
        c_result, c_time = best_time(lambda: call(_kernels), args.repeat)
        if not np.array_equal(np.asarray(py_result), np.asarray(c_result)):
            print(f"{name}: BACKEND MISMATCH", file=sys.stderr)
            return 1
        print(f"{name:<44} {py_time:>9.4f}s {c_time:>9.4f}s {py_time / c_time:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
