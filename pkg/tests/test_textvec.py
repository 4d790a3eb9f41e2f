"""Hashtag vocabulary filtering and log TF-IDF profile matrices."""

import math

import numpy as np
import pytest

from commap.errors import DataError
from commap.ingest import ProfileDocument
from commap.textvec import build_vocabulary, describe_community, tfidf, top_entries


def doc(uid, *tokens):
    return ProfileDocument(uid, tuple(tokens))


def oracle_fixed_point(docs, min_df, min_doc_terms):
    """Reference implementation of the alternating filter, written plainly."""
    active = list(docs)
    while True:
        df = {}
        for d in active:
            for t in set(d.tokens):
                df[t] = df.get(t, 0) + 1
        terms = {t for t, c in df.items() if c >= min_df}
        kept = [d for d in active if sum(t in terms for t in d.tokens) >= min_doc_terms]
        if len(kept) == len(active):
            return sorted(terms), [d.account_id for d in kept]
        active = kept


def test_vocabulary_fixed_point_matches_oracle_random():
    rng = np.random.default_rng(0)
    alphabet = [f"tag{i}" for i in range(12)]
    for trial in range(10):
        docs = []
        for u in range(30):
            size = int(rng.integers(1, 15))
            tokens = rng.choice(alphabet, size=size, p=None)
            docs.append(doc(f"u{u:02d}", *tokens))
        min_df, min_doc_terms = int(rng.integers(2, 6)), int(rng.integers(2, 8))
        want_terms, want_docs = oracle_fixed_point(docs, min_df, min_doc_terms)
        if not want_terms or not want_docs:
            with pytest.raises(DataError):
                build_vocabulary(docs, min_df, min_doc_terms)
            continue
        vocab, retained = build_vocabulary(docs, min_df, min_doc_terms)
        assert list(vocab.terms) == want_terms
        assert [d.account_id for d in retained] == want_docs


def test_vocabulary_filter_cascade():
    # two-stage cascade at min_df=2, min_doc_terms=2:
    # round 1: df a=3 b=2 c=3 d=1 e=1 -> terms {a,b,c}; u2=(c,d) and u3=(c,e)
    #          each keep only one token and drop out
    # round 2: df over u0,u1,u4 gives c=1 -> terms {a,b}; u4=(a,c) keeps only
    #          'a' and drops out
    # round 3: df a=2 b=2 over u0,u1 -> terms {a,b}; stable
    docs = [
        doc("u0", "a", "b"),
        doc("u1", "a", "b"),
        doc("u2", "c", "d"),
        doc("u3", "c", "e"),
        doc("u4", "a", "c"),
    ]
    want_terms, want_docs = oracle_fixed_point(docs, 2, 2)
    vocab, retained = build_vocabulary(docs, min_df=2, min_doc_terms=2)
    assert list(vocab.terms) == want_terms == ["a", "b"]
    assert [d.account_id for d in retained] == want_docs == ["u0", "u1"]
    assert vocab.df == {"a": 2, "b": 2}


def test_vocabulary_boundaries():
    # df boundary: term kept at exactly min_df, dropped one below
    base = [doc(f"u{i}", "keep", "keep", "pad", "pad") for i in range(4)]
    base[3] = doc("u3", "keep", "drop", "pad", "pad")
    vocab, retained = build_vocabulary(base, min_df=4, min_doc_terms=2)
    assert "keep" in vocab.terms and "pad" in vocab.terms and "drop" not in vocab.terms
    # doc-length boundary counts tokens with multiplicity over kept terms
    docs = [doc(f"u{i}", *(["t"] * 10)) for i in range(4)] + [doc("u9", *(["t"] * 9))]
    vocab, retained = build_vocabulary(docs, min_df=4, min_doc_terms=10)
    assert [d.account_id for d in retained] == ["u0", "u1", "u2", "u3"]


def test_vocabulary_empty_is_fatal():
    with pytest.raises(DataError, match="zero documents"):
        build_vocabulary([], 4, 10)
    sparse_docs = [doc("u0", "a"), doc("u1", "b")]
    with pytest.raises(DataError, match="min_df=4"):
        build_vocabulary(sparse_docs, 4, 10)


def test_tfidf_matches_hand_formula():
    docs = [
        doc("d0", "apple", "apple", "brick", "common"),
        doc("d1", "apple", "brick", "brick", "common"),
        doc("d2", "brick", "common", "dune"),
        doc("d3", "dune", "dune", "common", "apple"),
        doc("d4", "common", "apple", "brick", "dune"),
    ]
    vocab, retained = build_vocabulary(docs, min_df=3, min_doc_terms=3)
    pm = tfidf(retained, vocab)
    assert list(pm.terms) == ["apple", "brick", "common", "dune"]
    assert list(pm.doc_ids) == ["d0", "d1", "d2", "d3", "d4"]

    n = 5
    df = {"apple": 4, "brick": 4, "common": 5, "dune": 3}
    got = pm.V.toarray()
    for col, d in enumerate(docs):
        tf = {}
        for t in d.tokens:
            tf[t] = tf.get(t, 0) + 1
        raw = np.zeros(4)
        for row, term in enumerate(pm.terms):
            if term in tf:
                raw[row] = (1.0 + math.log(tf[term])) * math.log(n / df[term])
        want = raw / np.linalg.norm(raw)
        assert np.allclose(got[:, col], want, atol=1e-12)
    # ubiquitous term: df == N makes its idf, hence every entry, exactly zero
    common_row = list(pm.terms).index("common")
    assert np.all(got[common_row, :] == 0.0)
    # unit columns
    assert np.allclose(np.linalg.norm(got, axis=0), 1.0, atol=1e-12)


def test_tfidf_drops_zero_norm_columns():
    # u0 only uses the ubiquitous tag, so its column would be all zeros
    docs = [doc("u0", "ubiq"), doc("u1", "ubiq", "rare"), doc("u2", "ubiq", "rare")]
    vocab, retained = build_vocabulary(docs, min_df=1, min_doc_terms=1)
    pm = tfidf(retained, vocab)
    assert list(pm.doc_ids) == ["u1", "u2"]
    assert list(pm.terms) == ["rare", "ubiq"]
    # surviving columns are unit vectors on the informative term alone
    assert np.allclose(pm.V.toarray(), [[1.0, 1.0], [0.0, 0.0]], atol=1e-12)


def test_top_entries_order_and_ties():
    terms = ["alpha", "beta", "gamma", "delta", "zero"]
    vec = np.array([0.5, 0.9, 0.5, 0.0, -0.1])
    got = top_entries(vec, terms, k=10)
    assert got == [("beta", 0.9), ("alpha", 0.5), ("gamma", 0.5)]
    assert top_entries(vec, terms, k=2) == [("beta", 0.9), ("alpha", 0.5)]
    assert top_entries(np.zeros(5), terms) == []


def test_describe_community_mean_of_columns():
    docs = [doc(f"u{i}", *["a", "b", "c"][: (i % 3) + 1] * 3) for i in range(6)]
    vocab, retained = build_vocabulary(docs, min_df=2, min_doc_terms=2)
    pm = tfidf(retained, vocab)
    members = [pm.doc_ids[0], pm.doc_ids[1], "ghost", pm.doc_ids[1]]
    desc = describe_community(7, members, pm)
    dense = pm.V.toarray()
    want = (dense[:, 0] + dense[:, 1]) / 2.0
    assert np.allclose(desc.vector, want, atol=1e-15)
    assert desc.community_id == 7
    assert desc.members_total == 3  # deduplicated, ghost included
    assert desc.members_with_profiles == 2
    assert desc.top_terms == top_entries(want, pm.terms)


def test_describe_community_requires_profiles():
    docs = [doc(f"u{i}", "a", "a") for i in range(4)]
    vocab, retained = build_vocabulary(docs, min_df=2, min_doc_terms=1)
    pm = tfidf(retained, vocab)
    with pytest.raises(DataError, match="no members with profile"):
        describe_community(0, ["ghost1", "ghost2"], pm)
