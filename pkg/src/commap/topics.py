"""Non-negative matrix factorization over the profile matrix, plus the
community-to-topic cosine mapping.

Initialization is deterministic NNDSVD (driven by a randomized truncated SVD
with a fixed internal seed), so the whole factorization is reproducible
without averaging over restarts.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from commap.errors import NumericalError
from commap.textvec import CommunityDescription, ProfileMatrix, top_entries

log = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 400
DEFAULT_TOL = 1e-5
DEFAULT_MAP_THRESHOLD = 0.1
MU_EPS = 1e-9

# the truncated SVD inside NNDSVD uses its own constant seed: initialization
# must not vary with any user-facing parameter
_SVD_SEED = 0x5EED
_SVD_POWER_ITER = 4
_SVD_OVERSAMPLE = 8


@dataclass
class TopicModel:
    W: np.ndarray  # terms x T, non-negative
    H: np.ndarray  # T x documents, non-negative
    T: int
    objective_trace: list[float] = field(default_factory=list)
    terms: tuple[str, ...] | None = None
    doc_ids: tuple[str, ...] | None = None


@dataclass(frozen=True)
class CommunityTopicMap:
    community_id: int
    entries: list[tuple[int, float]]  # (topic_index, similarity), descending
    error: str | None = None


def _matrix_of(V) -> sp.csr_matrix:
    if isinstance(V, ProfileMatrix):
        V = V.V
    if sp.issparse(V):
        out = V.tocsr().astype(np.float64)
    else:
        out = sp.csr_matrix(np.asarray(V, dtype=np.float64))
    if out.nnz and out.data.min() < 0:
        raise ValueError("matrix must be non-negative")
    return out


def truncated_svd(V: sp.spmatrix, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rank-k randomized SVD (subspace iteration, fixed seed): U, S, Vt."""
    n, m = V.shape
    if not 1 <= k <= min(n, m):
        raise ValueError(f"rank must satisfy 1 <= k <= {min(n, m)}, got {k}")
    sample = min(k + _SVD_OVERSAMPLE, min(n, m))
    rng = np.random.default_rng(_SVD_SEED)
    omega = rng.standard_normal((m, sample))
    Q, _ = np.linalg.qr(V @ omega)
    for _ in range(_SVD_POWER_ITER):
        Q, _ = np.linalg.qr(V.T @ Q)
        Q, _ = np.linalg.qr(V @ Q)
    B = Q.T @ V  # sample x m, dense
    Ub, S, Vt = np.linalg.svd(np.asarray(B), full_matrices=False)
    U = Q @ Ub
    return U[:, :k], S[:k], Vt[:k]


def nndsvd_init(V, T: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic NNDSVD initialization (sparse variant: zeros stay zero).

    Each singular triplet contributes the dominant non-negative section pair
    of its singular vectors, scaled to preserve the triplet's energy. If the
    numerical rank falls short of T, the factor width shrinks to the rank
    with a warning.
    """
    M = _matrix_of(V)
    n, m = M.shape
    if not 1 <= T <= min(n, m):
        raise ValueError(f"T must satisfy 1 <= T <= {min(n, m)}, got {T}")
    U, S, Vt = truncated_svd(M, T)
    rank = int(np.sum(S > S[0] * max(n, m) * np.finfo(np.float64).eps)) if S[0] > 0 else 0
    if rank == 0:
        raise ValueError("matrix has numerical rank 0, nothing to factorize")
    if rank < T:
        log.warning("requested %d topics but numerical rank is %d; reducing", T, rank)
        T = rank
    W = np.zeros((n, T), dtype=np.float64)
    H = np.zeros((T, m), dtype=np.float64)
    # leading pair of a non-negative matrix can be taken entrywise non-negative
    W[:, 0] = math.sqrt(S[0]) * np.abs(U[:, 0])
    H[0, :] = math.sqrt(S[0]) * np.abs(Vt[0, :])
    for j in range(1, T):
        x, y = U[:, j], Vt[j, :]
        xp, xn = np.clip(x, 0, None), np.clip(-x, 0, None)
        yp, yn = np.clip(y, 0, None), np.clip(-y, 0, None)
        norm_xp, norm_yp = np.linalg.norm(xp), np.linalg.norm(yp)
        norm_xn, norm_yn = np.linalg.norm(xn), np.linalg.norm(yn)
        m_p, m_n = norm_xp * norm_yp, norm_xn * norm_yn
        if m_p >= m_n:
            if m_p == 0.0:
                continue
            u, v, sigma = xp / norm_xp, yp / norm_yp, m_p
        else:
            u, v, sigma = xn / norm_xn, yn / norm_yn, m_n
        lbd = math.sqrt(S[j] * sigma)
        W[:, j] = lbd * u
        H[j, :] = lbd * v
    return W, H


def _residual(norm_v2: float, WtV: np.ndarray, W: np.ndarray, H: np.ndarray) -> float:
    # ||V - WH||_F^2 expanded through traces; no dense WH materialized
    cross = float(np.sum(WtV * H))
    gram = float(np.sum((W.T @ W) * (H @ H.T)))
    return math.sqrt(max(norm_v2 - 2.0 * cross + gram, 0.0))


def nmf(
    V,
    T: int,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> TopicModel:
    """Multiplicative-update NMF from NNDSVD; trace of Frobenius residuals.

    Stops when the relative objective change drops below tol or after
    max_iter updates. Non-finite intermediate values abort with the failing
    iteration index.
    """
    M = _matrix_of(V)
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    W, H = nndsvd_init(M, T)
    T_eff = W.shape[1]
    norm_v2 = float(np.sum(M.data * M.data))
    Mt = M.T.tocsr()
    WtV = (Mt @ W).T
    trace = [_residual(norm_v2, WtV, W, H)]
    for it in range(1, max_iter + 1):
        H *= WtV / ((W.T @ W) @ H + MU_EPS)
        W *= (M @ H.T) / (W @ (H @ H.T) + MU_EPS)
        WtV = (Mt @ W).T
        resid = _residual(norm_v2, WtV, W, H)
        if not math.isfinite(resid):
            raise NumericalError(f"non-finite factorization objective at iteration {it}")
        prev = trace[-1]
        trace.append(resid)
        if prev == 0.0 or abs(prev - resid) / prev < tol:
            break
    terms = V.terms if isinstance(V, ProfileMatrix) else None
    doc_ids = V.doc_ids if isinstance(V, ProfileMatrix) else None
    return TopicModel(W=W, H=H, T=T_eff, objective_trace=trace, terms=terms, doc_ids=doc_ids)


def top_topic_terms(model: TopicModel, k: int = 10) -> list[list[tuple[str, float]]]:
    """Per topic, the k largest W entries as (term, weight), ties lexicographic."""
    if model.terms is None:
        raise ValueError("model carries no term vocabulary")
    return [top_entries(model.W[:, t], model.terms, k) for t in range(model.T)]


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm."""
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def map_communities(
    descriptions: Sequence[CommunityDescription],
    model: TopicModel,
    threshold: float = DEFAULT_MAP_THRESHOLD,
) -> list[CommunityTopicMap]:
    """Match each community description to topics by cosine similarity.

    Topics scoring below the threshold are dropped; an all-zero description
    vector yields an error entry for that community while others proceed.
    """
    maps: list[CommunityTopicMap] = []
    for desc in descriptions:
        if desc.vector.shape[0] != model.W.shape[0]:
            raise ValueError(
                f"description for community {desc.community_id} has "
                f"{desc.vector.shape[0]} terms, model has {model.W.shape[0]}"
            )
        if not np.any(desc.vector):
            maps.append(
                CommunityTopicMap(
                    desc.community_id, [], error="zero description vector: similarity undefined"
                )
            )
            continue
        entries = []
        for t in range(model.T):
            sim = cosine(desc.vector, model.W[:, t])
            if sim >= threshold:
                entries.append((t, sim))
        entries.sort(key=lambda e: (-e[1], e[0]))
        maps.append(CommunityTopicMap(desc.community_id, entries))
    return maps
