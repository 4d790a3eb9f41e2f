"""Undirected weighted graphs over account ids, and the builders that
produce them from interaction events and follower edges.

The central structure is an immutable CSR adjacency keyed by a sorted node
vocabulary, which is exactly the layout the clustering kernels consume.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from commap.errors import DataError
from commap.ingest import FollowerEdge, InteractionEvent

MENTION = "mention"
RETWEET = "retweet"
FOLLOWER = "follower"
LAYERS = (MENTION, RETWEET, FOLLOWER)

DEFAULT_MIN_COMPONENT = 5


class Graph:
    """Undirected weighted graph with string node ids and CSR adjacency.

    Node order is the sorted id order, so two graphs over the same edge set
    are structurally identical regardless of construction path.
    """

    __slots__ = ("nodes", "indptr", "indices", "weights", "_index")

    def __init__(
        self,
        nodes: Sequence[str],
        indptr: np.ndarray,
        indices: np.ndarray,
        weights: np.ndarray,
    ) -> None:
        self.nodes: tuple[str, ...] = tuple(nodes)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        self._index = {a: i for i, a in enumerate(self.nodes)}

    @classmethod
    def from_edge_weights(
        cls, nodes: Iterable[str], edges: Mapping[tuple[str, str], float]
    ) -> "Graph":
        """Build from undirected edges keyed by id pairs (order irrelevant)."""
        node_list = sorted(set(nodes))
        index = {a: i for i, a in enumerate(node_list)}
        adj: list[list[tuple[int, float]]] = [[] for _ in node_list]
        seen: set[tuple[int, int]] = set()
        for (a, b), w in edges.items():
            if a == b:
                raise ValueError(f"self-loop on node {a!r}")
            if w <= 0:
                raise ValueError(f"non-positive edge weight on ({a!r}, {b!r})")
            i, j = index[a], index[b]
            key = (i, j) if i < j else (j, i)
            if key in seen:
                raise ValueError(f"duplicate edge ({a!r}, {b!r})")
            seen.add(key)
            adj[i].append((j, float(w)))
            adj[j].append((i, float(w)))
        n = len(node_list)
        indptr = np.zeros(n + 1, dtype=np.int64)
        for i, row in enumerate(adj):
            row.sort()
            indptr[i + 1] = indptr[i] + len(row)
        indices = np.empty(indptr[-1], dtype=np.int64)
        weights = np.empty(indptr[-1], dtype=np.float64)
        pos = 0
        for row in adj:
            for j, w in row:
                indices[pos] = j
                weights[pos] = w
                pos += 1
        return cls(node_list, indptr, indices, weights)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def number_of_edges(self) -> int:
        return int(self.indices.shape[0]) // 2

    def total_weight(self) -> float:
        return float(self.weights.sum()) / 2.0

    def index_of(self, account_id: str) -> int:
        try:
            return self._index[account_id]
        except KeyError:
            raise KeyError(f"unknown node id {account_id!r}") from None

    def degree_weights(self) -> np.ndarray:
        """Weighted degree k_u per node."""
        out = np.zeros(self.n, dtype=np.float64)
        np.add.at(out, np.repeat(np.arange(self.n), np.diff(self.indptr)), self.weights)
        return out

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Yield each undirected edge once as (i, j, w) with i < j, in index order."""
        for i in range(self.n):
            for p in range(self.indptr[i], self.indptr[i + 1]):
                j = int(self.indices[p])
                if j > i:
                    yield i, j, float(self.weights[p])

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.weights, self.indices, self.indptr), shape=(self.n, self.n)
        )

    def connected_component_labels(self) -> tuple[int, np.ndarray]:
        if self.n == 0:
            return 0, np.zeros(0, dtype=np.int64)
        count, labels = connected_components(self.to_scipy(), directed=False)
        return int(count), labels.astype(np.int64)

    def subgraph(self, keep: Iterable[int]) -> "Graph":
        """Induced subgraph on the given node indices (id order preserved)."""
        keep_idx = sorted(set(int(i) for i in keep))
        remap = {old: new for new, old in enumerate(keep_idx)}
        nodes = [self.nodes[i] for i in keep_idx]
        edges: dict[tuple[str, str], float] = {}
        for old in keep_idx:
            for p in range(self.indptr[old], self.indptr[old + 1]):
                j = int(self.indices[p])
                if j > old and j in remap:
                    edges[(self.nodes[old], self.nodes[j])] = float(self.weights[p])
        return Graph.from_edge_weights(nodes, edges)


def build_interaction_graph(
    events: Sequence[InteractionEvent], kind: str, reciprocal: bool = True
) -> Graph:
    """Collapse directed interaction events of one kind into an undirected graph.

    With reciprocal=True an edge {u, v} exists only when each side interacted
    with the other at least once; its weight is the total event count in both
    directions. With reciprocal=False any one-sided interaction produces the
    edge, weighted the same way.
    """
    if kind not in (MENTION, RETWEET):
        raise ValueError(f"unknown interaction kind {kind!r}")
    totals: dict[tuple[str, str], int] = {}
    directions: dict[tuple[str, str], set[str]] = {}
    nodes: set[str] = set()
    for ev in events:
        if ev.kind != kind or ev.source == ev.target:
            continue
        nodes.add(ev.source)
        nodes.add(ev.target)
        key = (ev.source, ev.target) if ev.source < ev.target else (ev.target, ev.source)
        totals[key] = totals.get(key, 0) + 1
        directions.setdefault(key, set()).add(ev.source)
    edges = {
        key: float(total)
        for key, total in totals.items()
        if not reciprocal or len(directions[key]) == 2
    }
    return Graph.from_edge_weights(nodes, edges)


def build_follower_graph(
    follower_edges: Sequence[FollowerEdge], reciprocal: bool = True
) -> Graph:
    """Undirected follower graph; reciprocal=True keeps mutual follows only.

    Edges are unweighted (weight 1).
    """
    pairs = {(e.follower, e.followee) for e in follower_edges}
    nodes: set[str] = set()
    for a, b in pairs:
        nodes.add(a)
        nodes.add(b)
    edges: dict[tuple[str, str], float] = {}
    for a, b in pairs:
        key = (a, b) if a < b else (b, a)
        if key in edges:
            continue
        if reciprocal and (b, a) not in pairs:
            continue
        edges[key] = 1.0
    return Graph.from_edge_weights(nodes, edges)


def filter_components(graph: Graph, min_component: int = DEFAULT_MIN_COMPONENT) -> Graph:
    """Drop connected components smaller than min_component nodes."""
    if graph.n == 0:
        return graph
    count, labels = graph.connected_component_labels()
    sizes = np.bincount(labels, minlength=count)
    keep = [i for i in range(graph.n) if sizes[labels[i]] >= min_component]
    return graph.subgraph(keep)


def _fmt_weight(w: float) -> str:
    return str(int(w)) if w == int(w) else repr(w)


def write_edges_csv(graph: Graph, path: str | Path) -> None:
    """Write the edge list as source,target,weight (ids, lexicographic order)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source", "target", "weight"])
        for i, j, w in graph.edges():
            writer.writerow([graph.nodes[i], graph.nodes[j], _fmt_weight(w)])


def read_edges_csv(path: str | Path) -> Graph:
    """Rebuild a graph from a source,target,weight edge list."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"edge list not found: {path}")
    edges: dict[tuple[str, str], float] = {}
    nodes: set[str] = set()
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["source", "target", "weight"]:
            raise DataError(f"edge list {path} must start with header 'source,target,weight'")
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"edge list {path}: row {reader.line_num} has {len(row)} fields")
            a, b, w_raw = row[0], row[1], row[2]
            try:
                w = float(w_raw)
            except ValueError:
                raise DataError(
                    f"edge list {path}: row {reader.line_num} has non-numeric weight {w_raw!r}"
                ) from None
            key = (a, b) if a < b else (b, a)
            if key in edges:
                raise DataError(f"edge list {path}: duplicate edge {key}")
            edges[key] = w
            nodes.add(a)
            nodes.add(b)
    try:
        return Graph.from_edge_weights(nodes, edges)
    except ValueError as exc:
        raise DataError(f"edge list {path}: {exc}") from None


def write_gexf(graph: Graph, path: str | Path) -> None:
    """Write a minimal static undirected GEXF 1.2 file, deterministically."""
    path = Path(path)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<gexf xmlns="http://www.gexf.net/1.2draft" version="1.2">',
        '  <graph mode="static" defaultedgetype="undirected">',
        "    <nodes>",
    ]
    for i, name in enumerate(graph.nodes):
        label = escape(name, {'"': "&quot;"})
        lines.append(f'      <node id="{i}" label="{label}" />')
    lines.append("    </nodes>")
    lines.append("    <edges>")
    for eid, (i, j, w) in enumerate(graph.edges()):
        lines.append(
            f'      <edge id="{eid}" source="{i}" target="{j}" weight="{_fmt_weight(w)}" />'
        )
    lines.append("    </edges>")
    lines.append("  </graph>")
    lines.append("</gexf>")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
