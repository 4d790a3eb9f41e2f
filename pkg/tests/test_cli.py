"""Command line surface: exit codes, stage composition, determinism."""

import filecmp
import json
from pathlib import Path

import pytest

from commap.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


def make_bench(tmp_path, seed=3):
    out = tmp_path / "bench"
    code = run_cli(
        "bench", "--out", out, "--blocks", "12,12", "--p-in", "0.4",
        "--p-out", "0.02", "--seed", seed,
    )
    assert code == 0
    return out / "corpus.jsonl", out / "followers.csv"


COMMON = [
    "--method", "label_propagation", "--runs", "10",
    "--mc-samples", "400", "--seed", "5", "--min-members", "4",
]
RUN_KNOBS = COMMON + [
    "--resolutions", "0.5,1.0", "--min-df", "2", "--min-doc-terms", "2", "--topics", "2",
]


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()
    }


def test_run_is_deterministic_and_composes_from_stages(tmp_path, capsys):
    corpus, followers = make_bench(tmp_path)

    out1, out2, staged = tmp_path / "r1", tmp_path / "r2", tmp_path / "st"
    for out in (out1, out2):
        assert run_cli("run", "--corpus", corpus, "--followers", followers,
                       "--out", out, *RUN_KNOBS) == 0
    assert tree_bytes(out1) == tree_bytes(out2)

    lines = [l for l in capsys.readouterr().out.splitlines() if l]
    stages = [l.split(":")[0] for l in lines[-8:]]
    assert stages == ["ingest", "graph", "sweep", "detect", "describe", "topics", "map", "report"]

    # the same stages invoked one command at a time write identical bytes
    assert run_cli("ingest", "--corpus", corpus, "--followers", followers, "--out", staged) == 0
    assert run_cli("graph", "--out", staged) == 0
    assert run_cli("sweep", "--out", staged, "--resolutions", "0.5,1.0", *COMMON) == 0
    best = json.loads((staged / "sweep_mention.json").read_text())["best_resolution"]
    assert run_cli("detect", "--out", staged, "--resolution", best, *COMMON) == 0
    assert run_cli("describe", "--out", staged, "--min-df", "2", "--min-doc-terms", "2",
                   "--min-members", "4") == 0
    assert run_cli("topics", "--out", staged, "--topics", "2") == 0
    assert run_cli("map", "--out", staged) == 0
    assert run_cli("report", "--out", staged) == 0
    assert tree_bytes(out1) == tree_bytes(staged)


def test_sweep_row_count(tmp_path):
    corpus, followers = make_bench(tmp_path)
    out = tmp_path / "o"
    assert run_cli("ingest", "--corpus", corpus, "--followers", followers, "--out", out) == 0
    assert run_cli("graph", "--out", out) == 0
    assert run_cli("sweep", "--out", out, "--resolutions", "0.5,1.0", *COMMON) == 0
    rows = (out / "sweep_mention.csv").read_text().splitlines()
    assert rows[0] == "resolution,mean_corrected_stability,community_count"
    assert len(rows) == 3


def test_map_threshold_subset(tmp_path):
    corpus, followers = make_bench(tmp_path)
    out = tmp_path / "o"
    assert run_cli("run", "--corpus", corpus, "--followers", followers,
                   "--out", out, *RUN_KNOBS) == 0

    def mapping(path):
        pairs = set()
        for line in Path(path).read_text().splitlines()[1:]:
            cid, topic, sim = line.split(",")
            pairs.add((int(cid), int(topic)))
        return pairs

    loose = mapping(out / "mapping_mention.csv")
    assert run_cli("map", "--out", out, "--threshold", "0.5") == 0
    strict = mapping(out / "mapping_mention.csv")
    assert strict <= loose


def test_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("COMMAP_OUT_DIR", raising=False)
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    followers = tmp_path / "f.csv"
    followers.write_text("follower,followee\n")

    assert run_cli() == 1  # no subcommand
    assert run_cli("sweep", "--out", tmp_path, "--resolutions", "abc") == 1
    assert run_cli("ingest", "--corpus", empty, "--followers", followers) == 1  # no --out anywhere
    assert (
        run_cli("ingest", "--corpus", empty, "--followers", followers, "--out", tmp_path / "o")
        == 2
    )
    err = capsys.readouterr().err
    assert "ingest" in err  # empty corpus diagnostic names the failing stage
    assert run_cli("detect", "--out", tmp_path / "nothing") == 2  # missing artifact
    assert run_cli("detect", "--method", "walktrap", "--out", tmp_path) == 1  # bad choice
    assert "invalid choice" in capsys.readouterr().err


def test_exit_code_numerical(tmp_path, capsys):
    corpus, followers = make_bench(tmp_path)
    out = tmp_path / "o"
    assert run_cli("ingest", "--corpus", corpus, "--followers", followers, "--out", out) == 0
    assert run_cli("graph", "--out", out) == 0
    code = run_cli(
        "sweep", "--out", out, "--resolutions", "1.0", "--method", "label_propagation",
        "--runs", "6", "--mc-samples", "100", "--min-members", "5000",
    )
    assert code == 3
    assert "numerical error" in capsys.readouterr().err


def test_out_dir_env_var(tmp_path, monkeypatch):
    corpus, followers = make_bench(tmp_path)
    out = tmp_path / "via_env"
    monkeypatch.setenv("COMMAP_OUT_DIR", str(out))
    assert run_cli("ingest", "--corpus", corpus, "--followers", followers) == 0
    assert (out / "accounts.csv").exists()


def test_anonymize_report(tmp_path):
    corpus, followers = make_bench(tmp_path)
    out = tmp_path / "o"
    assert run_cli("run", "--corpus", corpus, "--followers", followers,
                   "--out", out, *RUN_KNOBS) == 0
    plain = json.loads((out / "summary_mention.json").read_text())
    assert run_cli("report", "--out", out, "--anonymize") == 0
    anon = json.loads((out / "summary_mention.json").read_text())
    assert anon["anonymized"] is True
    plain_members = {m for row in plain["community_table"] for m in row["members"]}
    anon_members = {m for row in anon["community_table"] for m in row["members"]}
    assert plain_members.isdisjoint(anon_members)
    assert all(len(m) == 12 for m in anon_members)
    # same structure otherwise
    assert [row["size"] for row in plain["community_table"]] == [
        row["size"] for row in anon["community_table"]
    ]
