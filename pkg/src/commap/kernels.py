"""Kernel backend selection: compiled extension if present, else pure Python.

Set COMMAP_PURE_KERNELS=1 to force the pure-Python fallback. Both backends
produce bit-identical output for identical inputs (tested in
tests/test_kernels.py), so the choice only affects speed.
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("COMMAP_PURE_KERNELS", "") == "1":
    from commap import _kernels_py as _impl
else:
    try:
        from commap import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from commap import _kernels_py as _impl

BACKEND: str = _impl.BACKEND

splitmix64_stream = _impl.splitmix64_stream


def _as_csr_arrays(indptr, indices, weights):
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if np.any(weights <= 0.0):
        raise ValueError("kernel graphs require strictly positive edge weights")
    return indptr, indices, weights


def louvain_labels(indptr, indices, weights, gamma: float, seed: int) -> np.ndarray:
    """Seeded Louvain on a symmetric CSR graph; contiguous int64 labels."""
    indptr, indices, weights = _as_csr_arrays(indptr, indices, weights)
    return _impl.louvain_labels(indptr, indices, weights, float(gamma), int(seed))


def labelprop_labels(indptr, indices, weights, seed: int, max_rounds: int = 100) -> np.ndarray:
    """Seeded asynchronous label propagation on a symmetric CSR graph."""
    indptr, indices, weights = _as_csr_arrays(indptr, indices, weights)
    return _impl.labelprop_labels(indptr, indices, weights, int(seed), int(max_rounds))


def pair_mean(indptr, indices, data, nodes) -> float:
    """Mean of sparse matrix entries over all unordered pairs of `nodes`."""
    return float(_impl.pair_mean(indptr, indices, data, nodes))


def sample_pair_means(indptr, indices, data, n: int, c: int, samples: int, seed: int) -> np.ndarray:
    """Mean pairwise entry for `samples` seeded random c-subsets of range(n)."""
    return _impl.sample_pair_means(indptr, indices, data, int(n), int(c), int(samples), int(seed))
