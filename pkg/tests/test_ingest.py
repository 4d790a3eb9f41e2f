"""Corpus and follower-list parsing."""

import json

import pytest

from commap.errors import DataError
from commap.ingest import normalize_hashtag, parse_corpus, parse_followers


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec if isinstance(rec, str) else json.dumps(rec))
            fh.write("\n")
    return path


def record(tid, uid, mentions=(), hashtags=(), country=None, retweet_of=None):
    rec = {
        "id": tid,
        "user_id": uid,
        "text": "x",
        "entities": {"mentions": list(mentions), "hashtags": list(hashtags)},
    }
    if country is not None:
        rec["country"] = country
    if retweet_of is not None:
        rec["retweet_of_user"] = retweet_of
    return rec


def test_normalize_hashtag():
    assert normalize_hashtag("#FOO") == "foo"
    assert normalize_hashtag("Tag") == "tag"
    assert normalize_hashtag("#Café") == "cafe"
    assert normalize_hashtag("#Ação") == "acao"
    assert normalize_hashtag("#ÑANDÚ") == "nandu"
    assert normalize_hashtag("#") is None
    assert normalize_hashtag("") is None
    assert normalize_hashtag("   ") is None


def test_parse_corpus_basic(tmp_path):
    path = write_jsonl(
        tmp_path / "c.jsonl",
        [
            record("t1", "alice", mentions=["bob", "bob", "alice"], hashtags=["#One", "#two"], country="BR"),
            record("t2", "alice", mentions=["carol"], country="PT"),
            record("t3", "bob", retweet_of="alice", hashtags=["#Two"]),
        ],
    )
    parse = parse_corpus(path)
    assert parse.valid_records == 3
    assert parse.errors == []

    by_id = {a.account_id: a for a in parse.accounts}
    assert sorted(by_id) == ["alice", "bob", "carol"]
    assert by_id["alice"].tweet_count == 2
    assert by_id["alice"].country_tag == "BR"  # first record wins
    assert by_id["carol"].tweet_count == 0 and by_id["carol"].country_tag is None

    kinds = [(e.source, e.target, e.kind, e.tweet_id) for e in parse.events]
    # self-mention dropped, duplicate mention within t1 collapsed
    assert kinds == [
        ("alice", "bob", "mention", "t1"),
        ("alice", "carol", "mention", "t2"),
        ("bob", "alice", "retweet", "t3"),
    ]

    profiles = {p.account_id: p.tokens for p in parse.profiles}
    assert profiles == {"alice": ("one", "two"), "bob": ("two",)}


def test_parse_corpus_numeric_ids(tmp_path):
    path = write_jsonl(tmp_path / "c.jsonl", [record(10, 42, mentions=[7])])
    parse = parse_corpus(path)
    assert [a.account_id for a in parse.accounts] == ["42", "7"]
    assert parse.events[0].tweet_id == "10"


def test_parse_corpus_malformed_lines(tmp_path):
    path = write_jsonl(
        tmp_path / "c.jsonl",
        [
            "{not json",
            record("t1", "alice"),
            json.dumps({"id": "t2"}),  # missing user_id
            json.dumps({"id": True, "user_id": "x"}),  # bool id is invalid
            json.dumps({"id": "t3", "user_id": "bob", "entities": {"mentions": "nope"}}),
            "",
        ],
    )
    parse = parse_corpus(path)
    assert parse.valid_records == 1
    assert [lineno for lineno, _ in parse.errors] == [1, 3, 4, 5]


def test_parse_corpus_all_invalid_raises(tmp_path):
    path = write_jsonl(tmp_path / "c.jsonl", ["{bad", "{}"])
    with pytest.raises(DataError, match="ingest"):
        parse_corpus(path)


def test_parse_corpus_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        parse_corpus(tmp_path / "absent.jsonl")


def test_parse_corpus_unknown_format(tmp_path):
    path = write_jsonl(tmp_path / "c.jsonl", [record("t1", "a")])
    with pytest.raises(DataError, match="format"):
        parse_corpus(path, format="parquet")


def test_parse_corpus_order_invariance(tmp_path):
    records = [
        record("t1", "u1", mentions=["u2"], hashtags=["#a"]),
        record("t2", "u2", mentions=["u3"], hashtags=["#b"]),
        record("t3", "u3", mentions=["u1"], hashtags=["#c", "#a"]),
    ]
    p1 = parse_corpus(write_jsonl(tmp_path / "f.jsonl", records))
    p2 = parse_corpus(write_jsonl(tmp_path / "r.jsonl", records[::-1]))
    assert p1.accounts == p2.accounts
    assert p1.events == p2.events
    assert {p.account_id: sorted(p.tokens) for p in p1.profiles} == {
        p.account_id: sorted(p.tokens) for p in p2.profiles
    }


def test_parse_followers(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("follower,followee\na,b\nb,a\na,b\nc,c\n\nd,e\n")
    edges = parse_followers(path)
    assert [(e.follower, e.followee) for e in edges] == [("a", "b"), ("b", "a"), ("d", "e")]


def test_parse_followers_header_required(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("a,b\nc,d\n")
    with pytest.raises(DataError, match="header"):
        parse_followers(path)
    path.write_text("")
    with pytest.raises(DataError, match="empty"):
        parse_followers(path)


def test_parse_followers_bad_rows(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("follower,followee\na,b,c\n")
    with pytest.raises(DataError, match="fields"):
        parse_followers(path)
    path.write_text("follower,followee\na,\n")
    with pytest.raises(DataError, match="empty fields"):
        parse_followers(path)
