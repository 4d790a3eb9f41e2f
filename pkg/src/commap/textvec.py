"""Hashtag vocabulary, log TF-IDF profile matrix, and community descriptions.

Documents are per-account hashtag multisets. Rare terms (document frequency
below min_df) and thin documents (fewer than min_doc_terms tokens after term
filtering) are removed by alternating the two filters to a fixed point, since
dropping documents can lower term frequencies below the threshold again.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from commap.errors import DataError
from commap.ingest import ProfileDocument

DEFAULT_MIN_DF = 4
DEFAULT_MIN_DOC_TERMS = 10
TOP_TERMS_K = 10


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]  # lexicographic
    df: dict[str, int]
    min_df: int
    min_doc_terms: int

    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.terms)}


@dataclass(frozen=True)
class ProfileMatrix:
    """Unit-column log TF-IDF matrix, terms x documents."""

    V: sp.csc_matrix
    terms: tuple[str, ...]
    doc_ids: tuple[str, ...]

    def doc_index(self) -> dict[str, int]:
        return {d: i for i, d in enumerate(self.doc_ids)}


@dataclass(frozen=True)
class CommunityDescription:
    community_id: int
    vector: np.ndarray  # mean of member columns, over Vocabulary terms
    top_terms: list[tuple[str, float]]
    members_total: int
    members_with_profiles: int


def build_vocabulary(
    docs: Sequence[ProfileDocument],
    min_df: int = DEFAULT_MIN_DF,
    min_doc_terms: int = DEFAULT_MIN_DOC_TERMS,
) -> tuple[Vocabulary, list[ProfileDocument]]:
    """Alternate term and document filters to a fixed point.

    A term needs at least min_df retained documents containing it; a document
    needs at least min_doc_terms tokens drawn from retained terms (counted
    with multiplicity). An empty final vocabulary is fatal.
    """
    if not docs:
        raise DataError("cannot build a vocabulary from zero documents")
    active = list(docs)
    terms: set[str] = set()
    while True:
        df_counter: Counter[str] = Counter()
        for doc in active:
            df_counter.update(set(doc.tokens))
        terms = {t for t, c in df_counter.items() if c >= min_df}
        retained = [
            doc
            for doc in active
            if sum(1 for tok in doc.tokens if tok in terms) >= min_doc_terms
        ]
        if len(retained) == len(active):
            break
        active = retained
    if not terms or not active:
        raise DataError(
            "vocabulary is empty after filtering: "
            f"{len(docs)} documents in, {len(active)} retained, "
            f"{len(terms)} terms kept (min_df={min_df}, min_doc_terms={min_doc_terms})"
        )
    ordered = tuple(sorted(terms))
    df = {t: c for t, c in df_counter.items() if t in terms}
    return Vocabulary(ordered, df, min_df, min_doc_terms), active


def tfidf(docs: Sequence[ProfileDocument], vocab: Vocabulary) -> ProfileMatrix:
    """Log TF-IDF: entry (1 + ln tf) * ln(N/df), columns scaled to unit norm.

    N is the retained document count. Columns whose every term is ubiquitous
    (df = N, zero IDF everywhere) have zero norm and are dropped.
    """
    n_docs = len(docs)
    term_index = vocab.index()
    idf = {t: math.log(n_docs / vocab.df[t]) for t in vocab.terms}
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    doc_ids: list[str] = []
    col = 0
    for doc in docs:
        tf = Counter(tok for tok in doc.tokens if tok in term_index)
        entries = [
            (term_index[t], (1.0 + math.log(c)) * idf[t]) for t, c in sorted(tf.items())
        ]
        norm = math.sqrt(sum(v * v for _, v in entries))
        if norm == 0.0:
            continue
        for r, v in entries:
            if v != 0.0:
                rows.append(r)
                cols.append(col)
                vals.append(v / norm)
        doc_ids.append(doc.account_id)
        col += 1
    matrix = sp.csc_matrix(
        (vals, (rows, cols)), shape=(len(vocab.terms), col), dtype=np.float64
    )
    matrix.sort_indices()
    return ProfileMatrix(matrix, vocab.terms, tuple(doc_ids))


def top_entries(vector: np.ndarray, terms: Sequence[str], k: int = TOP_TERMS_K) -> list[tuple[str, float]]:
    """k largest strictly-positive entries, ties broken lexicographically."""
    pairs = [(terms[i], float(v)) for i, v in enumerate(vector) if v > 0.0]
    pairs.sort(key=lambda tw: (-tw[1], tw[0]))
    return pairs[:k]


def describe_community(
    community_id: int, members: Sequence[str], pm: ProfileMatrix
) -> CommunityDescription:
    """Mean profile vector of the community members that have a column.

    Members without a retained document are skipped but counted, so reports
    can state profile coverage.
    """
    doc_index = pm.doc_index()
    cols = sorted(doc_index[m] for m in set(members) if m in doc_index)
    if not cols:
        raise DataError(
            f"community {community_id} has no members with profile columns"
        )
    sub = pm.V[:, cols]
    vector = np.asarray(sub.sum(axis=1)).ravel() / len(cols)
    return CommunityDescription(
        community_id=community_id,
        vector=vector,
        top_terms=top_entries(vector, pm.terms),
        members_total=len(set(members)),
        members_with_profiles=len(cols),
    )
