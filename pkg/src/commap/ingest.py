"""Parse a tweet-style JSONL corpus and a follower CSV into value objects.

Entity fields are authoritative: mentions and hashtags come from the record's
``entities`` object, never from scanning the text, which avoids locale and
tokenization ambiguity. Outputs are deterministically ordered so replaying a
parse yields byte-identical serializations.
"""

from __future__ import annotations

import csv
import json
import logging
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from commap.errors import DataError

log = logging.getLogger(__name__)

MENTION = "mention"
RETWEET = "retweet"


@dataclass(frozen=True)
class Account:
    account_id: str
    country_tag: str | None = None
    tweet_count: int = 0


@dataclass(frozen=True)
class InteractionEvent:
    source: str
    target: str
    kind: str  # MENTION or RETWEET
    tweet_id: str


@dataclass(frozen=True)
class FollowerEdge:
    follower: str
    followee: str


@dataclass(frozen=True)
class ProfileDocument:
    """One account's tweets reduced to their hashtags (a token multiset)."""

    account_id: str
    tokens: tuple[str, ...] = ()


@dataclass
class CorpusParse:
    """Result bundle of parse_corpus: the three output lists plus diagnostics."""

    accounts: list[Account] = field(default_factory=list)
    events: list[InteractionEvent] = field(default_factory=list)
    profiles: list[ProfileDocument] = field(default_factory=list)
    errors: list[tuple[int, str]] = field(default_factory=list)
    valid_records: int = 0


def normalize_hashtag(raw: str) -> str | None:
    """Lowercase, strip a leading '#', and fold diacritics (NFKD, marks removed).

    Returns None for tokens that are empty or contain whitespace afterwards.
    """
    tag = raw.lstrip("#")
    tag = unicodedata.normalize("NFKD", tag)
    tag = "".join(ch for ch in tag if not unicodedata.combining(ch))
    tag = tag.lower()
    if not tag or any(ch.isspace() for ch in tag):
        return None
    return tag


def _id_str(value) -> str | None:
    if isinstance(value, str):
        value = value.strip()
        return value or None
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return None


def _parse_record(obj) -> tuple[str, str, str | None, list[str], list[str], str | None]:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    tweet_id = _id_str(obj.get("id"))
    if tweet_id is None:
        raise ValueError("missing or invalid 'id'")
    user_id = _id_str(obj.get("user_id"))
    if user_id is None:
        raise ValueError("missing or invalid 'user_id'")
    country = obj.get("country")
    if country is not None and not isinstance(country, str):
        raise ValueError("'country' must be a string")
    entities = obj.get("entities", {})
    if entities is None:
        entities = {}
    if not isinstance(entities, dict):
        raise ValueError("'entities' must be an object")
    mentions_raw = entities.get("mentions", [])
    hashtags_raw = entities.get("hashtags", [])
    if not isinstance(mentions_raw, list) or not isinstance(hashtags_raw, list):
        raise ValueError("'entities.mentions' and 'entities.hashtags' must be lists")
    mentions = []
    for m in mentions_raw:
        mid = _id_str(m)
        if mid is None:
            raise ValueError("invalid mention entry")
        mentions.append(mid)
    hashtags = []
    for h in hashtags_raw:
        if not isinstance(h, str):
            raise ValueError("invalid hashtag entry")
        hashtags.append(h)
    retweet_of = obj.get("retweet_of_user")
    retweet_of_id = None
    if retweet_of is not None:
        retweet_of_id = _id_str(retweet_of)
        if retweet_of_id is None:
            raise ValueError("invalid 'retweet_of_user'")
    return tweet_id, user_id, country, mentions, hashtags, retweet_of_id


def parse_corpus(path: str | Path, format: str = "jsonl") -> CorpusParse:
    """Parse a JSONL corpus into accounts, interaction events and profile docs.

    Malformed lines are recorded with their line number and skipped; a corpus
    with zero valid records raises DataError. Events are deduplicated per
    (tweet, target, kind) and self-interactions are dropped. Output lists are
    sorted (accounts and profiles by account_id, events by source then
    tweet_id) so results do not depend on input ordering quirks.
    """
    if format != "jsonl":
        raise DataError(f"unsupported corpus format: {format!r}")
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")

    tweet_counts: dict[str, int] = {}
    countries: dict[str, str] = {}
    tokens: dict[str, list[str]] = {}
    events: list[InteractionEvent] = []
    targets: set[str] = set()
    errors: list[tuple[int, str]] = []
    valid = 0

    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                tweet_id, user_id, country, mentions, hashtags, retweet_of = _parse_record(obj)
            except (json.JSONDecodeError, ValueError) as exc:
                errors.append((lineno, str(exc)))
                continue
            valid += 1
            tweet_counts[user_id] = tweet_counts.get(user_id, 0) + 1
            if country and user_id not in countries:
                countries[user_id] = country
            doc = tokens.setdefault(user_id, [])
            for raw in hashtags:
                tag = normalize_hashtag(raw)
                if tag is not None:
                    doc.append(tag)
            # multiple mentions of the same account within one tweet count once
            for target in dict.fromkeys(mentions):
                if target != user_id:
                    events.append(InteractionEvent(user_id, target, MENTION, tweet_id))
                    targets.add(target)
            if retweet_of is not None and retweet_of != user_id:
                events.append(InteractionEvent(user_id, retweet_of, RETWEET, tweet_id))
                targets.add(retweet_of)

    if valid == 0:
        raise DataError(f"ingest: no valid records in corpus {path} ({len(errors)} malformed lines)")
    if errors:
        log.warning("ingest: skipped %d malformed corpus lines", len(errors))

    account_ids = sorted(set(tweet_counts) | targets)
    accounts = [
        Account(a, countries.get(a), tweet_counts.get(a, 0)) for a in account_ids
    ]
    events.sort(key=lambda e: (e.source, e.tweet_id, e.kind, e.target))
    profiles = [
        ProfileDocument(a, tuple(tokens[a])) for a in sorted(tokens)
    ]
    return CorpusParse(accounts, events, profiles, errors, valid)


def parse_followers(path: str | Path) -> list[FollowerEdge]:
    """Parse a follower,followee CSV; deduplicates and drops self-loops.

    Unknown account ids are retained (networks may include accounts absent
    from the corpus). A missing or wrong header is fatal.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"followers file not found: {path}")
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"followers file {path} is empty (missing header)") from None
        if [h.strip() for h in header] != ["follower", "followee"]:
            raise DataError(
                f"followers file {path} must start with header 'follower,followee'"
            )
        seen: set[tuple[str, str]] = set()
        edges: list[FollowerEdge] = []
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise DataError(f"followers file {path}: row {reader.line_num} has {len(row)} fields")
            a, b = row[0].strip(), row[1].strip()
            if not a or not b:
                raise DataError(f"followers file {path}: row {reader.line_num} has empty fields")
            if a == b or (a, b) in seen:
                continue
            seen.add((a, b))
            edges.append(FollowerEdge(a, b))
    edges.sort(key=lambda e: (e.follower, e.followee))
    return edges
