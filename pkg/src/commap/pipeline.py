"""Pipeline stages: each reads the previous stage's artifacts from the output
directory and writes its own, so any stage can be rerun in isolation. The
one-shot runner simply chains the stages, which makes stagewise and one-shot
execution identical by construction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from commap import artifacts
from commap.bench import PlantedSpec, SyntheticCorpusSpec, generate_corpus
from commap.detect import (
    DEFAULT_RESOLUTION,
    DEFAULT_RUNS,
    DEFAULT_TAU,
    MAX_CONSENSUS_ITERATIONS,
    consensus,
)
from commap.errors import DataError
from commap.ingest import parse_corpus, parse_followers
from commap.network import (
    DEFAULT_MIN_COMPONENT,
    FOLLOWER,
    LAYERS,
    build_follower_graph,
    build_interaction_graph,
    filter_components,
    read_edges_csv,
    write_edges_csv,
    write_gexf,
)
from commap.stability import (
    DEFAULT_MC_SAMPLES,
    DEFAULT_MIN_MEMBERS,
    score_consensus,
    select_resolution,
    sweep,
)
from commap.textvec import (
    DEFAULT_MIN_DF,
    DEFAULT_MIN_DOC_TERMS,
    build_vocabulary,
    describe_community,
    tfidf,
)
from commap.topics import (
    DEFAULT_MAP_THRESHOLD,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    map_communities,
    nmf,
)

log = logging.getLogger(__name__)

DEFAULT_RESOLUTION_GRID = (0.5, 0.75, 1.0, 1.5, 2.0, 3.0)
DEFAULT_TOPICS = 15


@dataclass
class PipelineConfig:
    corpus: Path
    followers: Path
    out_dir: Path
    layer: str = "mention"
    reciprocal: bool = True
    min_component: int = DEFAULT_MIN_COMPONENT
    method: str = "louvain"
    resolutions: tuple[float, ...] = DEFAULT_RESOLUTION_GRID
    runs: int = DEFAULT_RUNS
    tau: float = DEFAULT_TAU
    min_members: int = DEFAULT_MIN_MEMBERS
    mc_samples: int = DEFAULT_MC_SAMPLES
    min_df: int = DEFAULT_MIN_DF
    min_doc_terms: int = DEFAULT_MIN_DOC_TERMS
    topics: int = DEFAULT_TOPICS
    map_threshold: float = DEFAULT_MAP_THRESHOLD
    seed: int = 0
    anonymize: bool = False


def _ensure_out(out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def stage_ingest(corpus: str | Path, followers: str | Path, out_dir: str | Path) -> dict:
    out = _ensure_out(out_dir)
    parse = parse_corpus(corpus)
    follower_edges = parse_followers(followers)
    artifacts.write_ingest(out, parse, follower_edges)
    return {
        "accounts": len(parse.accounts),
        "events": len(parse.events),
        "profiles": len(parse.profiles),
        "follower_edges": len(follower_edges),
        "valid_records": parse.valid_records,
        "malformed_lines": len(parse.errors),
    }


def stage_graph(
    out_dir: str | Path,
    layer: str,
    reciprocal: bool = True,
    min_component: int = DEFAULT_MIN_COMPONENT,
) -> dict:
    out = _ensure_out(out_dir)
    if layer not in LAYERS:
        raise DataError(f"unknown network layer {layer!r}; expected one of {LAYERS}")
    if layer == FOLLOWER:
        graph = build_follower_graph(artifacts.read_followers(out), reciprocal)
    else:
        graph = build_interaction_graph(artifacts.read_events(out), layer, reciprocal)
    graph = filter_components(graph, min_component)
    write_edges_csv(graph, out / artifacts.graph_csv(layer))
    write_gexf(graph, out / artifacts.graph_gexf(layer))
    return {"layer": layer, "nodes": graph.n, "edges": graph.number_of_edges()}


def _load_graph(out: Path, layer: str):
    return read_edges_csv(artifacts.require(out / artifacts.graph_csv(layer), "graph"))


def stage_detect(
    out_dir: str | Path,
    layer: str,
    method: str = "louvain",
    resolution: float = DEFAULT_RESOLUTION,
    runs: int = DEFAULT_RUNS,
    tau: float = DEFAULT_TAU,
    min_members: int = DEFAULT_MIN_MEMBERS,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    max_iterations: int = MAX_CONSENSUS_ITERATIONS,
) -> dict:
    out = _ensure_out(out_dir)
    graph = _load_graph(out, layer)
    result = consensus(
        graph,
        method=method,
        resolution=resolution,
        runs=runs,
        tau=tau,
        seed=seed,
        max_iterations=max_iterations,
    )
    if not result.converged:
        log.warning(
            "consensus did not converge within %d iterations; using the modal partition",
            max_iterations,
        )
    reports = score_consensus(result, min_members=min_members, samples=mc_samples, seed=seed)
    artifacts.write_consensus(out, layer, result)
    artifacts.write_stability(out, layer, reports, method, seed, min_members, result.iterations)
    return {
        "layer": layer,
        "communities": len(result.communities),
        "assigned": int(graph.n - len(result.unassigned)),
        "unassigned": len(result.unassigned),
        "converged": result.converged,
        "scored": len(reports),
    }


def stage_sweep(
    out_dir: str | Path,
    layer: str,
    resolutions: Sequence[float] = DEFAULT_RESOLUTION_GRID,
    method: str = "louvain",
    runs: int = DEFAULT_RUNS,
    tau: float = DEFAULT_TAU,
    min_members: int = DEFAULT_MIN_MEMBERS,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> dict:
    out = _ensure_out(out_dir)
    graph = _load_graph(out, layer)
    points = sweep(
        graph,
        resolutions,
        method=method,
        runs=runs,
        tau=tau,
        min_members=min_members,
        samples=mc_samples,
        seed=seed,
    )
    best = select_resolution(points)
    artifacts.write_sweep(out, layer, points, best.resolution)
    return {
        "layer": layer,
        "points": len(points),
        "best_resolution": best.resolution,
        "best_mean_corrected_stability": best.mean_corrected_stability,
    }


def stage_describe(
    out_dir: str | Path,
    layer: str,
    min_df: int = DEFAULT_MIN_DF,
    min_doc_terms: int = DEFAULT_MIN_DOC_TERMS,
    min_members: int = DEFAULT_MIN_MEMBERS,
) -> dict:
    out = _ensure_out(out_dir)
    docs = artifacts.read_profiles(out)
    cons = artifacts.read_consensus(out, layer)
    vocab, retained = build_vocabulary(docs, min_df=min_df, min_doc_terms=min_doc_terms)
    pm = tfidf(retained, vocab)
    artifacts.write_profile_matrix(out, pm)
    descriptions = []
    skipped = 0
    for cid, members in enumerate(cons["communities"]):
        if len(members) < min_members:
            continue
        try:
            descriptions.append(describe_community(cid, members, pm))
        except DataError as exc:
            skipped += 1
            log.warning("describe: %s", exc)
    artifacts.write_descriptions(out, layer, descriptions)
    return {
        "layer": layer,
        "terms": len(vocab.terms),
        "documents": len(pm.doc_ids),
        "described": len(descriptions),
        "skipped": skipped,
    }


def stage_topics(
    out_dir: str | Path,
    topics: int = DEFAULT_TOPICS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> dict:
    out = _ensure_out(out_dir)
    pm = artifacts.read_profile_matrix(out)
    limit = min(pm.V.shape)
    T = min(topics, limit)
    if T < topics:
        log.warning("reducing topic count from %d to matrix limit %d", topics, T)
    model = nmf(pm, T, max_iter=max_iter, tol=tol)
    artifacts.write_topic_model(out, model, max_iter, tol)
    return {
        "topics": model.T,
        "iterations": len(model.objective_trace) - 1,
        "final_residual": model.objective_trace[-1],
    }


def stage_map(
    out_dir: str | Path, layer: str, threshold: float = DEFAULT_MAP_THRESHOLD
) -> dict:
    out = _ensure_out(out_dir)
    model = artifacts.read_topic_model(out)
    descriptions = artifacts.read_descriptions(out, layer, model.W.shape[0])
    maps = map_communities(descriptions, model, threshold)
    for m in maps:
        if m.error is not None:
            log.warning("map: community %d skipped: %s", m.community_id, m.error)
    artifacts.write_mapping(out, layer, maps)
    return {
        "layer": layer,
        "mapped": sum(1 for m in maps if m.entries),
        "skipped": sum(1 for m in maps if m.error is not None),
        "pairs": sum(len(m.entries) for m in maps),
    }


def stage_bench(
    out_dir: str | Path,
    blocks: Sequence[int],
    p_in: float,
    p_out: float,
    hashtags_per_block: int = 6,
    shared_hashtags: int = 4,
    tweets_per_account: int = 6,
    seed: int = 0,
) -> dict:
    out = _ensure_out(out_dir)
    spec = SyntheticCorpusSpec(
        planted=PlantedSpec(tuple(blocks), p_in, p_out, seed),
        hashtags_per_block=hashtags_per_block,
        shared_hashtags=shared_hashtags,
        tweets_per_account=tweets_per_account,
        seed=seed,
    )
    truth = generate_corpus(spec, out / artifacts.BENCH_CORPUS, out / artifacts.BENCH_FOLLOWERS)
    artifacts.write_json(out / artifacts.GROUND_TRUTH_JSON, truth)
    return {
        "accounts": spec.planted.n,
        "corpus": str(out / artifacts.BENCH_CORPUS),
        "followers": str(out / artifacts.BENCH_FOLLOWERS),
    }


def coverage_phrase(assigned: int, total: int) -> str:
    percent = round(100 * assigned / total) if total else 0
    return f"{percent}% of total network account nodes"


def stage_report(out_dir: str | Path, layer: str, anonymize: bool = False) -> dict:
    """Merge the layer's artifacts into one summary document.

    The consensus, stability and graph artifacts are required; descriptions,
    mapping and sweep enrich the summary when present.
    """
    out = _ensure_out(out_dir)
    graph = _load_graph(out, layer)
    cons = artifacts.read_consensus(out, layer)
    stab = artifacts.read_stability(out, layer)
    sweep_path = out / artifacts.sweep_json(layer)
    sweep_obj = artifacts.read_sweep(out, layer) if sweep_path.exists() else None
    desc_path = out / artifacts.descriptions_json(layer)
    descriptions = (
        {d["community_id"]: d for d in artifacts.read_json(desc_path, "describe")["communities"]}
        if desc_path.exists()
        else {}
    )
    mapping_path = out / artifacts.mapping_csv(layer)
    mapping = artifacts.read_mapping(out, layer) if mapping_path.exists() else {}
    scores = {c["community_id"]: c for c in stab["communities"]}

    def ident(account_id: str) -> str:
        return artifacts.anonymize_id(account_id) if anonymize else account_id

    table = []
    for cid, members in enumerate(cons["communities"]):
        row = {
            "community_id": cid,
            "size": len(members),
            "members": sorted(ident(m) for m in members),
        }
        if cid in scores:
            for key in ("stability", "expected_stability", "corrected_stability", "negative"):
                row[key] = scores[cid][key]
        if cid in descriptions:
            row["top_terms"] = descriptions[cid]["top_terms"]
            row["profile_coverage"] = [
                descriptions[cid]["members_with_profiles"],
                descriptions[cid]["members_total"],
            ]
        if cid in mapping:
            row["topics"] = [[t, s] for t, s in mapping[cid]]
        table.append(row)

    assigned = graph.n - len(cons["unassigned"])
    summary = {
        "layer": layer,
        "nodes": graph.n,
        "edges": graph.number_of_edges(),
        "method": stab["method"],
        "seed": stab["seed"],
        "resolution": cons["resolution"],
        "tau": cons["tau"],
        "runs": cons["runs"],
        "converged": cons["converged"],
        "communities": len(cons["communities"]),
        "assigned_nodes": assigned,
        "unassigned_nodes": len(cons["unassigned"]),
        "coverage": coverage_phrase(assigned, graph.n),
        "anonymized": anonymize,
        "community_table": table,
        "unassigned": sorted(ident(m) for m in cons["unassigned"]),
    }
    if sweep_obj is not None:
        summary["sweep"] = sweep_obj
    artifacts.write_json(out / artifacts.summary_json(layer), summary)
    return {
        "layer": layer,
        "communities": len(cons["communities"]),
        "coverage": summary["coverage"],
    }


def run_pipeline(config: PipelineConfig) -> dict:
    """Chain every stage: ingest, graph, sweep, detect at the best resolution,
    describe, topics, map, report. Returns the per-stage summaries."""
    out = _ensure_out(config.out_dir)
    info: dict = {}
    info["ingest"] = stage_ingest(config.corpus, config.followers, out)
    info["graph"] = stage_graph(out, config.layer, config.reciprocal, config.min_component)
    info["sweep"] = stage_sweep(
        out,
        config.layer,
        resolutions=config.resolutions,
        method=config.method,
        runs=config.runs,
        tau=config.tau,
        min_members=config.min_members,
        mc_samples=config.mc_samples,
        seed=config.seed,
    )
    info["detect"] = stage_detect(
        out,
        config.layer,
        method=config.method,
        resolution=info["sweep"]["best_resolution"],
        runs=config.runs,
        tau=config.tau,
        min_members=config.min_members,
        mc_samples=config.mc_samples,
        seed=config.seed,
    )
    info["describe"] = stage_describe(
        out, config.layer, config.min_df, config.min_doc_terms, config.min_members
    )
    info["topics"] = stage_topics(out, config.topics)
    info["map"] = stage_map(out, config.layer, config.map_threshold)
    info["report"] = stage_report(out, config.layer, config.anonymize)
    return info
