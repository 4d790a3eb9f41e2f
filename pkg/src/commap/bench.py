"""Synthetic planted-partition data with known ground truth, and NMI.

Real interaction corpora cannot be redistributed, so validation runs on
generated data: a planted-partition graph for the clustering layers, and a
full synthetic corpus (tweets with block-specific hashtags, mentions wired by
the same block structure) for end-to-end runs. All generation is driven by a
small deterministic PRNG so identical specs give identical files.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from commap.network import Graph

_MASK = (1 << 64) - 1


class SplitMix:
    """splitmix64 PRNG; tiny, seedable, stable across platforms."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        # 53-bit mantissa, uniform in [0, 1)
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = _MASK - (_MASK + 1) % n
        while True:
            draw = self.next_u64()
            if draw <= limit:
                return draw % n


@dataclass(frozen=True)
class PlantedSpec:
    blocks: tuple[int, ...]
    p_in: float
    p_out: float
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
        if not self.blocks or any(b < 1 for b in self.blocks):
            raise ValueError("blocks must be a nonempty list of positive sizes")
        if not 0.0 < self.p_in <= 1.0:
            raise ValueError(f"p_in must lie in (0, 1], got {self.p_in}")
        if not 0.0 <= self.p_out < 1.0:
            raise ValueError(f"p_out must lie in [0, 1), got {self.p_out}")
        if self.p_in <= self.p_out:
            raise ValueError("p_in must exceed p_out")

    @property
    def n(self) -> int:
        return sum(self.blocks)


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    planted: PlantedSpec
    hashtags_per_block: int = 6
    shared_hashtags: int = 4
    tweets_per_account: int = 6
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("hashtags_per_block", "shared_hashtags", "tweets_per_account"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


def _account_ids(n: int) -> list[str]:
    width = len(str(n - 1)) if n > 1 else 1
    return [f"a{i:0{width}d}" for i in range(n)]


def _block_labels(blocks: Sequence[int]) -> np.ndarray:
    labels = np.empty(sum(blocks), dtype=np.int64)
    pos = 0
    for b, size in enumerate(blocks):
        labels[pos : pos + size] = b
        pos += size
    return labels


def _planted_pairs(spec: PlantedSpec) -> list[tuple[int, int]]:
    """One Bernoulli draw per node pair, in fixed (i, j) order."""
    labels = _block_labels(spec.blocks)
    rng = SplitMix(spec.seed)
    pairs = []
    for i in range(spec.n):
        for j in range(i + 1, spec.n):
            p = spec.p_in if labels[i] == labels[j] else spec.p_out
            if rng.random() < p:
                pairs.append((i, j))
    return pairs


def generate_graph(spec: PlantedSpec) -> tuple[Graph, np.ndarray]:
    """Planted-partition graph (unit weights) and its block label per node.

    Node ids are zero-padded, so index order equals id order and the label
    array aligns with graph.nodes.
    """
    ids = _account_ids(spec.n)
    edges = {(ids[i], ids[j]): 1.0 for i, j in _planted_pairs(spec)}
    return Graph.from_edge_weights(ids, edges), _block_labels(spec.blocks)


RECIPROCATION_P = 0.8


def generate_corpus(
    spec: SyntheticCorpusSpec,
    corpus_path: str | Path,
    followers_path: str | Path,
) -> dict:
    """Write an ingest-compatible JSONL corpus and follower CSV; return truth.

    Mention pairs follow the planted block structure (same pair draws as
    generate_graph on spec.planted); the lower-id side always mentions the
    other, who reciprocates with probability 0.8. Each tweet carries three
    hashtags from the author's block pool plus one from the shared pool.
    Follower edges are drawn the same way from an offset seed.
    """
    planted = spec.planted
    n = planted.n
    ids = _account_ids(n)
    labels = _block_labels(planted.blocks)
    block_tags = [
        [f"b{b}tag{t}" for t in range(spec.hashtags_per_block)]
        for b in range(len(planted.blocks))
    ]
    shared_tags = [f"shared{t}" for t in range(spec.shared_hashtags)]

    rng = SplitMix(spec.seed)
    # tweet slot -> mention targets; filled before tweets are materialized
    mentions: dict[tuple[int, int], list[str]] = {}
    for i, j in _planted_pairs(planted):
        mentions.setdefault((i, rng.randint(spec.tweets_per_account)), []).append(ids[j])
        if rng.random() < RECIPROCATION_P:
            mentions.setdefault((j, rng.randint(spec.tweets_per_account)), []).append(ids[i])

    corpus_path = Path(corpus_path)
    with corpus_path.open("w", encoding="utf-8") as fh:
        for i, uid in enumerate(ids):
            pool = block_tags[labels[i]]
            for k in range(spec.tweets_per_account):
                tags = [pool[rng.randint(len(pool))] for _ in range(3)]
                tags.append(shared_tags[rng.randint(len(shared_tags))])
                record = {
                    "id": f"{uid}-t{k:02d}",
                    "user_id": uid,
                    "country": f"C{labels[i]}",
                    "text": " ".join("#" + t for t in tags),
                    "entities": {
                        "mentions": mentions.get((i, k), []),
                        "hashtags": tags,
                    },
                }
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    follower_rng = SplitMix(spec.seed + 1)
    followers_path = Path(followers_path)
    with followers_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("follower,followee\n")
        for i, j in _planted_pairs(planted):
            fh.write(f"{ids[i]},{ids[j]}\n")
            if follower_rng.random() < RECIPROCATION_P:
                fh.write(f"{ids[j]},{ids[i]}\n")

    return {
        "blocks": {uid: int(labels[i]) for i, uid in enumerate(ids)},
        "block_hashtags": block_tags,
        "shared_hashtags": shared_tags,
    }


def nmi(a: Sequence[int], b: Sequence[int]) -> float:
    """Normalized mutual information (arithmetic mean normalization).

    Inputs are equal-length label sequences over the same nodes. Two trivial
    identical partitions score 1.0 by convention.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("partitions must be equal-length 1-d label sequences")
    n = a.shape[0]
    if n == 0:
        raise ValueError("partitions must be nonempty")
    counts_a = Counter(a.tolist())
    counts_b = Counter(b.tolist())
    joint = Counter(zip(a.tolist(), b.tolist()))
    h_a = -sum((c / n) * math.log(c / n) for c in counts_a.values())
    h_b = -sum((c / n) * math.log(c / n) for c in counts_b.values())
    if h_a == 0.0 and h_b == 0.0:
        return 1.0
    mi = 0.0
    for (la, lb), c in joint.items():
        p = c / n
        mi += p * math.log(p * n * n / (counts_a[la] * counts_b[lb]))
    return 2.0 * mi / (h_a + h_b)
