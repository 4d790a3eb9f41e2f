"""Command line entry point.

Each subcommand wraps one pipeline stage; ``run`` chains them all. Exit
codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from commap.detect import (
    DEFAULT_RESOLUTION,
    DEFAULT_RUNS,
    DEFAULT_TAU,
    METHODS,
)
from commap.errors import DataError, NumericalError, UsageError
from commap.network import DEFAULT_MIN_COMPONENT, LAYERS, MENTION
from commap.pipeline import (
    DEFAULT_RESOLUTION_GRID,
    DEFAULT_TOPICS,
    PipelineConfig,
    run_pipeline,
    stage_bench,
    stage_describe,
    stage_detect,
    stage_graph,
    stage_ingest,
    stage_map,
    stage_report,
    stage_sweep,
    stage_topics,
)
from commap.stability import DEFAULT_MC_SAMPLES, DEFAULT_MIN_MEMBERS
from commap.textvec import DEFAULT_MIN_DF, DEFAULT_MIN_DOC_TERMS
from commap.topics import DEFAULT_MAP_THRESHOLD, DEFAULT_MAX_ITER, DEFAULT_TOL

OUT_DIR_ENV = "COMMAP_OUT_DIR"


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of calling sys.exit directly, so
    main() can map usage problems to a single exit code."""

    def error(self, message: str):
        raise UsageError(message)


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise UsageError("expected at least one value")
    return values


def _parse_ints(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise UsageError("expected at least one value")
    return values


def _add_out(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--out",
        type=Path,
        default=None,
        help=f"output directory (default: ${OUT_DIR_ENV})",
    )


def _add_layer(p: argparse.ArgumentParser) -> None:
    p.add_argument("--layer", choices=LAYERS, default=MENTION, help="network layer")


def _add_detect_knobs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=METHODS, default="louvain")
    p.add_argument("--runs", type=int, default=DEFAULT_RUNS)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--min-members", type=int, default=DEFAULT_MIN_MEMBERS)
    p.add_argument("--mc-samples", type=int, default=DEFAULT_MC_SAMPLES)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> _Parser:
    parser = _Parser(prog="commap", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("ingest", help="parse the corpus and follower list", parents=[])
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--followers", type=Path, required=True)
    _add_out(p)

    p = sub.add_parser("graph", help="build one reciprocal network layer")
    _add_out(p)
    _add_layer(p)
    p.add_argument(
        "--keep-one-way",
        action="store_true",
        help="keep non-reciprocated edges instead of requiring reciprocity",
    )
    p.add_argument("--min-component", type=int, default=DEFAULT_MIN_COMPONENT)

    p = sub.add_parser("detect", help="consensus community detection plus stability")
    _add_out(p)
    _add_layer(p)
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION)
    _add_detect_knobs(p)

    p = sub.add_parser("sweep", help="stability sweep over a resolution grid")
    _add_out(p)
    _add_layer(p)
    p.add_argument(
        "--resolutions",
        type=_parse_floats,
        default=DEFAULT_RESOLUTION_GRID,
        help="comma-separated resolution values",
    )
    _add_detect_knobs(p)

    p = sub.add_parser("describe", help="hashtag TF-IDF community descriptions")
    _add_out(p)
    _add_layer(p)
    p.add_argument("--min-df", type=int, default=DEFAULT_MIN_DF)
    p.add_argument("--min-doc-terms", type=int, default=DEFAULT_MIN_DOC_TERMS)
    p.add_argument("--min-members", type=int, default=DEFAULT_MIN_MEMBERS)

    p = sub.add_parser("topics", help="non-negative factorization of the profile matrix")
    _add_out(p)
    p.add_argument("--topics", type=int, default=DEFAULT_TOPICS)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)

    p = sub.add_parser("map", help="map communities onto topics by cosine similarity")
    _add_out(p)
    _add_layer(p)
    p.add_argument("--threshold", type=float, default=DEFAULT_MAP_THRESHOLD)

    p = sub.add_parser("bench", help="generate a synthetic corpus with known communities")
    _add_out(p)
    p.add_argument("--blocks", type=_parse_ints, default=(25, 25, 25, 25))
    p.add_argument("--p-in", type=float, default=0.3)
    p.add_argument("--p-out", type=float, default=0.01)
    p.add_argument("--hashtags-per-block", type=int, default=6)
    p.add_argument("--shared-hashtags", type=int, default=4)
    p.add_argument("--tweets-per-account", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("report", help="summarize a layer's artifacts into one document")
    _add_out(p)
    _add_layer(p)
    p.add_argument("--anonymize", action="store_true", help="hash account ids")

    p = sub.add_parser("run", help="run every stage end to end")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--followers", type=Path, required=True)
    _add_out(p)
    _add_layer(p)
    p.add_argument("--keep-one-way", action="store_true")
    p.add_argument("--min-component", type=int, default=DEFAULT_MIN_COMPONENT)
    p.add_argument(
        "--resolutions", type=_parse_floats, default=DEFAULT_RESOLUTION_GRID
    )
    _add_detect_knobs(p)
    p.add_argument("--min-df", type=int, default=DEFAULT_MIN_DF)
    p.add_argument("--min-doc-terms", type=int, default=DEFAULT_MIN_DOC_TERMS)
    p.add_argument("--topics", type=int, default=DEFAULT_TOPICS)
    p.add_argument("--map-threshold", type=float, default=DEFAULT_MAP_THRESHOLD)
    p.add_argument("--anonymize", action="store_true")

    return parser


def _out_dir(args: argparse.Namespace) -> Path:
    if args.out is not None:
        return args.out
    env = os.environ.get(OUT_DIR_ENV)
    if env:
        return Path(env)
    raise UsageError(f"--out is required when ${OUT_DIR_ENV} is not set")


def _format(stage: str, info: dict) -> str:
    parts = " ".join(f"{key}={info[key]}" for key in info)
    return f"{stage}: {parts}"


def _dispatch(args: argparse.Namespace) -> list[str]:
    cmd = args.command
    if cmd is None:
        raise UsageError("a subcommand is required (see --help)")
    if cmd == "ingest":
        return [_format(cmd, stage_ingest(args.corpus, args.followers, _out_dir(args)))]
    if cmd == "graph":
        info = stage_graph(
            _out_dir(args), args.layer, not args.keep_one_way, args.min_component
        )
        return [_format(cmd, info)]
    if cmd == "detect":
        info = stage_detect(
            _out_dir(args),
            args.layer,
            method=args.method,
            resolution=args.resolution,
            runs=args.runs,
            tau=args.tau,
            min_members=args.min_members,
            mc_samples=args.mc_samples,
            seed=args.seed,
        )
        return [_format(cmd, info)]
    if cmd == "sweep":
        info = stage_sweep(
            _out_dir(args),
            args.layer,
            resolutions=args.resolutions,
            method=args.method,
            runs=args.runs,
            tau=args.tau,
            min_members=args.min_members,
            mc_samples=args.mc_samples,
            seed=args.seed,
        )
        return [_format(cmd, info)]
    if cmd == "describe":
        info = stage_describe(
            _out_dir(args), args.layer, args.min_df, args.min_doc_terms, args.min_members
        )
        return [_format(cmd, info)]
    if cmd == "topics":
        return [_format(cmd, stage_topics(_out_dir(args), args.topics, args.max_iter, args.tol))]
    if cmd == "map":
        return [_format(cmd, stage_map(_out_dir(args), args.layer, args.threshold))]
    if cmd == "bench":
        info = stage_bench(
            _out_dir(args),
            args.blocks,
            args.p_in,
            args.p_out,
            hashtags_per_block=args.hashtags_per_block,
            shared_hashtags=args.shared_hashtags,
            tweets_per_account=args.tweets_per_account,
            seed=args.seed,
        )
        return [_format(cmd, info)]
    if cmd == "report":
        return [_format(cmd, stage_report(_out_dir(args), args.layer, args.anonymize))]
    if cmd == "run":
        config = PipelineConfig(
            corpus=args.corpus,
            followers=args.followers,
            out_dir=_out_dir(args),
            layer=args.layer,
            reciprocal=not args.keep_one_way,
            min_component=args.min_component,
            method=args.method,
            resolutions=args.resolutions,
            runs=args.runs,
            tau=args.tau,
            min_members=args.min_members,
            mc_samples=args.mc_samples,
            min_df=args.min_df,
            min_doc_terms=args.min_doc_terms,
            topics=args.topics,
            map_threshold=args.map_threshold,
            seed=args.seed,
            anonymize=args.anonymize,
        )
        info = run_pipeline(config)
        return [_format(stage, stage_info) for stage, stage_info in info.items()]
    raise UsageError(f"unknown command {cmd!r}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        for line in _dispatch(args):
            print(line)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
