"""Deterministic readers and writers for every pipeline artifact.

All output is plain files (JSON/CSV/MatrixMarket/GEXF/npy) with fixed key
order, fixed row order and repr-based float formatting, so identical inputs
and configuration produce byte-identical bundles. Readers raise
MissingArtifactError naming the producing stage when a dependency is absent.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.io import mmread, mmwrite

from commap.errors import DataError, MissingArtifactError
from commap.ingest import Account, CorpusParse, FollowerEdge, InteractionEvent, ProfileDocument
from commap.stability import StabilityReport, SweepPoint
from commap.textvec import CommunityDescription, ProfileMatrix
from commap.topics import CommunityTopicMap, TopicModel, top_topic_terms

# artifact file names, keyed where layer-dependent
ACCOUNTS_CSV = "accounts.csv"
EVENTS_CSV = "events.csv"
PROFILES_JSONL = "profiles.jsonl"
FOLLOWERS_CSV = "followers_edges.csv"
INGEST_JSON = "ingest.json"
TERMS_TXT = "terms.txt"
DOC_IDS_TXT = "doc_ids.txt"
PROFILE_MATRIX_MTX = "profile_matrix.mtx"
TOPICS_JSON = "topics.json"
TOPIC_W_NPY = "topic_model_W.npy"
TOPIC_H_NPY = "topic_model_H.npy"
BENCH_CORPUS = "corpus.jsonl"
BENCH_FOLLOWERS = "followers.csv"
GROUND_TRUTH_JSON = "ground_truth.json"


def graph_csv(layer: str) -> str:
    return f"graph_{layer}.csv"


def graph_gexf(layer: str) -> str:
    return f"graph_{layer}.gexf"


def consensus_json(layer: str) -> str:
    return f"consensus_{layer}.json"


def consensus_mtx(layer: str) -> str:
    return f"consensus_{layer}.mtx"


def consensus_nodes_txt(layer: str) -> str:
    return f"consensus_{layer}_nodes.txt"


def stability_json(layer: str) -> str:
    return f"stability_{layer}.json"


def sweep_csv(layer: str) -> str:
    return f"sweep_{layer}.csv"


def sweep_json(layer: str) -> str:
    return f"sweep_{layer}.json"


def descriptions_json(layer: str) -> str:
    return f"descriptions_{layer}.json"


def mapping_csv(layer: str) -> str:
    return f"mapping_{layer}.csv"


def summary_json(layer: str) -> str:
    return f"summary_{layer}.json"


def require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(
            f"missing artifact {path.name} in {path.parent}; run the '{producer}' stage first"
        )
    return path


def write_json(path: Path, obj) -> None:
    path.write_text(
        json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n",
        encoding="utf-8",
    )


def read_json(path: Path, producer: str) -> dict:
    require(path, producer)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"artifact {path} is not valid JSON: {exc}") from None


def _float_cell(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def anonymize_id(account_id: str) -> str:
    return hashlib.sha256(account_id.encode("utf-8")).hexdigest()[:12]


# ---------------------------------------------------------------- ingest

def write_ingest(out: Path, parse: CorpusParse, followers: list[FollowerEdge]) -> None:
    with (out / ACCOUNTS_CSV).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["account_id", "country", "tweet_count"])
        for a in parse.accounts:
            w.writerow([a.account_id, a.country_tag or "", a.tweet_count])
    with (out / EVENTS_CSV).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "kind", "tweet_id"])
        for e in parse.events:
            w.writerow([e.source, e.target, e.kind, e.tweet_id])
    with (out / PROFILES_JSONL).open("w", encoding="utf-8") as fh:
        for p in parse.profiles:
            fh.write(
                json.dumps({"account_id": p.account_id, "tokens": list(p.tokens)}, sort_keys=True)
                + "\n"
            )
    with (out / FOLLOWERS_CSV).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["follower", "followee"])
        for e in followers:
            w.writerow([e.follower, e.followee])
    write_json(
        out / INGEST_JSON,
        {
            "accounts": len(parse.accounts),
            "events": len(parse.events),
            "profiles": len(parse.profiles),
            "follower_edges": len(followers),
            "valid_records": parse.valid_records,
            "malformed_lines": [[lineno, msg] for lineno, msg in parse.errors],
        },
    )


def read_events(out: Path) -> list[InteractionEvent]:
    path = require(out / EVENTS_CSV, "ingest")
    events = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["source", "target", "kind", "tweet_id"]:
            raise DataError(f"unexpected header in {path}")
        for row in reader:
            events.append(InteractionEvent(row[0], row[1], row[2], row[3]))
    return events


def read_followers(out: Path) -> list[FollowerEdge]:
    path = require(out / FOLLOWERS_CSV, "ingest")
    edges = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["follower", "followee"]:
            raise DataError(f"unexpected header in {path}")
        for row in reader:
            edges.append(FollowerEdge(row[0], row[1]))
    return edges


def read_accounts(out: Path) -> list[Account]:
    path = require(out / ACCOUNTS_CSV, "ingest")
    accounts = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["account_id", "country", "tweet_count"]:
            raise DataError(f"unexpected header in {path}")
        for row in reader:
            accounts.append(Account(row[0], row[1] or None, int(row[2])))
    return accounts


def read_profiles(out: Path) -> list[ProfileDocument]:
    path = require(out / PROFILES_JSONL, "ingest")
    docs = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                docs.append(ProfileDocument(obj["account_id"], tuple(obj["tokens"])))
    return docs


# ---------------------------------------------------------------- detect

def write_consensus(out: Path, layer: str, result) -> None:
    write_json(
        out / consensus_json(layer),
        {
            "tau": result.tau,
            "resolution": result.resolution,
            "runs": result.runs,
            "converged": result.converged,
            "communities": result.communities,
            "unassigned": result.unassigned,
        },
    )
    mmwrite(out / consensus_mtx(layer), result.matrix.tocoo(), precision=17)
    (out / consensus_nodes_txt(layer)).write_text(
        "".join(f"{n}\n" for n in result.nodes), encoding="utf-8"
    )


def read_consensus(out: Path, layer: str) -> dict:
    obj = read_json(out / consensus_json(layer), "detect")
    for key in ("tau", "resolution", "runs", "converged", "communities", "unassigned"):
        if key not in obj:
            raise DataError(f"consensus artifact for layer {layer!r} lacks key {key!r}")
    return obj


def read_consensus_matrix(out: Path, layer: str) -> tuple[sp.csr_matrix, list[str]]:
    mtx = require(out / consensus_mtx(layer), "detect")
    nodes_path = require(out / consensus_nodes_txt(layer), "detect")
    matrix = mmread(mtx).tocsr()
    nodes = nodes_path.read_text(encoding="utf-8").splitlines()
    return matrix, nodes


def write_stability(
    out: Path,
    layer: str,
    reports: Sequence[StabilityReport],
    method: str,
    seed: int,
    min_members: int,
    iterations: int,
) -> None:
    write_json(
        out / stability_json(layer),
        {
            "method": method,
            "seed": seed,
            "min_members": min_members,
            "iterations": iterations,
            "communities": [
                {
                    "community_id": r.community_id,
                    "size": r.size,
                    "stability": r.stability,
                    "expected_stability": r.expected_stability,
                    "expected_stderr": r.expected_stderr,
                    "corrected_stability": r.corrected_stability,
                    "mc_samples": r.mc_samples,
                    "negative": r.negative,
                }
                for r in reports
            ],
        },
    )


def read_stability(out: Path, layer: str) -> dict:
    return read_json(out / stability_json(layer), "detect")


# ----------------------------------------------------------------- sweep

def write_sweep(out: Path, layer: str, points: Sequence[SweepPoint], best: float) -> None:
    with (out / sweep_csv(layer)).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["resolution", "mean_corrected_stability", "community_count"])
        for p in points:
            w.writerow(
                [_float_cell(p.resolution), _float_cell(p.mean_corrected_stability), p.community_count]
            )
    write_json(
        out / sweep_json(layer),
        {
            "best_resolution": best,
            "points": [
                {
                    "resolution": p.resolution,
                    "mean_corrected_stability": None
                    if math.isnan(p.mean_corrected_stability)
                    else p.mean_corrected_stability,
                    "community_count": p.community_count,
                }
                for p in points
            ],
        },
    )


def read_sweep(out: Path, layer: str) -> dict:
    return read_json(out / sweep_json(layer), "sweep")


# -------------------------------------------------------------- profiles

def write_profile_matrix(out: Path, pm: ProfileMatrix) -> None:
    mmwrite(out / PROFILE_MATRIX_MTX, pm.V.tocoo(), precision=17)
    (out / TERMS_TXT).write_text("".join(f"{t}\n" for t in pm.terms), encoding="utf-8")
    (out / DOC_IDS_TXT).write_text("".join(f"{d}\n" for d in pm.doc_ids), encoding="utf-8")


def read_profile_matrix(out: Path) -> ProfileMatrix:
    mtx = require(out / PROFILE_MATRIX_MTX, "describe")
    terms_path = require(out / TERMS_TXT, "describe")
    docs_path = require(out / DOC_IDS_TXT, "describe")
    V = mmread(mtx).tocsc()
    terms = tuple(terms_path.read_text(encoding="utf-8").splitlines())
    doc_ids = tuple(docs_path.read_text(encoding="utf-8").splitlines())
    if V.shape != (len(terms), len(doc_ids)):
        raise DataError(
            f"profile matrix shape {V.shape} does not match "
            f"{len(terms)} terms x {len(doc_ids)} documents"
        )
    return ProfileMatrix(V, terms, doc_ids)


def write_descriptions(out: Path, layer: str, descriptions: Sequence[CommunityDescription]) -> None:
    write_json(
        out / descriptions_json(layer),
        {
            "communities": [
                {
                    "community_id": d.community_id,
                    "members_total": d.members_total,
                    "members_with_profiles": d.members_with_profiles,
                    "top_terms": [[t, w] for t, w in d.top_terms],
                    "vector": [
                        [i, float(v)] for i, v in enumerate(d.vector) if v != 0.0
                    ],
                }
                for d in descriptions
            ]
        },
    )


def read_descriptions(out: Path, layer: str, n_terms: int) -> list[CommunityDescription]:
    obj = read_json(out / descriptions_json(layer), "describe")
    out_list = []
    for entry in obj["communities"]:
        vector = np.zeros(n_terms, dtype=np.float64)
        for i, v in entry["vector"]:
            vector[int(i)] = float(v)
        out_list.append(
            CommunityDescription(
                community_id=int(entry["community_id"]),
                vector=vector,
                top_terms=[(t, float(w)) for t, w in entry["top_terms"]],
                members_total=int(entry["members_total"]),
                members_with_profiles=int(entry["members_with_profiles"]),
            )
        )
    return out_list


# ---------------------------------------------------------------- topics

def write_topic_model(out: Path, model, max_iter: int, tol: float) -> None:
    np.save(out / TOPIC_W_NPY, model.W)
    np.save(out / TOPIC_H_NPY, model.H)
    write_json(
        out / TOPICS_JSON,
        {
            "T": model.T,
            "max_iter": max_iter,
            "tol": tol,
            "iterations": len(model.objective_trace) - 1,
            "objective_trace": model.objective_trace,
            "topics": [
                {"topic_index": t, "top_terms": [[term, w] for term, w in terms]}
                for t, terms in enumerate(top_topic_terms(model))
            ],
        },
    )


def read_topic_model(out: Path) -> TopicModel:
    w_path = require(out / TOPIC_W_NPY, "topics")
    h_path = require(out / TOPIC_H_NPY, "topics")
    meta = read_json(out / TOPICS_JSON, "topics")
    pm_terms = tuple(require(out / TERMS_TXT, "describe").read_text(encoding="utf-8").splitlines())
    W = np.load(w_path)
    H = np.load(h_path)
    return TopicModel(
        W=W,
        H=H,
        T=int(meta["T"]),
        objective_trace=[float(x) for x in meta["objective_trace"]],
        terms=pm_terms,
        doc_ids=None,
    )


def write_mapping(out: Path, layer: str, maps: Sequence[CommunityTopicMap]) -> None:
    with (out / mapping_csv(layer)).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["community_id", "topic_index", "similarity"])
        for m in maps:
            if m.error is not None:
                continue
            for topic_index, sim in m.entries:
                w.writerow([m.community_id, topic_index, _float_cell(sim)])


def read_mapping(out: Path, layer: str) -> dict[int, list[tuple[int, float]]]:
    path = require(out / mapping_csv(layer), "map")
    mapping: dict[int, list[tuple[int, float]]] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["community_id", "topic_index", "similarity"]:
            raise DataError(f"unexpected header in {path}")
        for row in reader:
            mapping.setdefault(int(row[0]), []).append((int(row[1]), float(row[2])))
    return mapping
