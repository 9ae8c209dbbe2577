"""End-to-end command line coverage via the dispatch wrapper.

Runs against the session-scoped synthetic corpus; exit codes follow the
documented mapping (0 ok, 1 usage, 2 data, 3 backend).
"""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from artjudge import __version__
from artjudge.cli import cli_dispatch


def test_no_arguments_prints_help_and_exits_one(capsys):
    assert cli_dispatch([]) == 1
    err = capsys.readouterr().err
    assert "Usage: artjudge" in err
    assert "adjudicate" in err


def test_help_exits_zero(capsys):
    assert cli_dispatch(["--help"]) == 0
    out = capsys.readouterr().out
    for name in ("validate", "candidates", "adjudicate", "bench", "graph"):
        assert name in out


def test_version_flag(capsys):
    assert cli_dispatch(["--version"]) == 0
    out = capsys.readouterr().out
    assert "artjudge" in out
    assert __version__ in out


def test_unknown_command_is_usage_error(capsys):
    assert cli_dispatch(["frobnicate"]) == 1
    assert "error" in capsys.readouterr().err.lower()


def test_validate_clean_corpus(mini, capsys):
    assert cli_dispatch(["validate", str(mini.path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("ok: 30 artists")
    assert "60 pairs" in out


def test_validate_reports_dangling_pair(mini, tmp_path, capsys):
    broken = tmp_path / "broken"
    shutil.copytree(mini.path, broken)
    doc = json.loads((broken / "pairs.json").read_text(encoding="utf-8"))
    doc["pairs"].append({"source_artist_id": "ghost",
                         "target_artist_id": "nobody"})
    (broken / "pairs.json").write_text(json.dumps(doc), encoding="utf-8")

    assert cli_dispatch(["validate", str(broken)]) == 2
    captured = capsys.readouterr()
    assert "dangling source artist 'ghost'" in captured.out
    assert "data error:" in captured.err


def test_fixture_command_generates_loadable_corpus(tmp_path, capsys):
    out_dir = tmp_path / "imp"
    assert cli_dispatch(["fixture", str(out_dir), "--kind", "impossible"]) == 0
    assert "50 pairs" in capsys.readouterr().out
    assert cli_dispatch(["validate", str(out_dir)]) == 0


def test_index_build_with_self_test(mini, capsys):
    assert cli_dispatch(["index", "build", str(mini.path), "--self-test", "20"]) == 0
    out = capsys.readouterr().out
    assert "indexed" in out
    recall = float(out.rsplit("recall@10:", 1)[1].split()[0])
    assert recall >= 0.9


def test_candidates_exact_and_indexed(mini, tmp_path, capsys):
    exact_out = tmp_path / "exact.jsonl"
    assert cli_dispatch(["candidates", str(mini.path), "-o", str(exact_out),
                         "--exact"]) == 0
    rows = [json.loads(line) for line in
            exact_out.read_text(encoding="utf-8").splitlines()]
    assert rows and all({"source", "target"} <= row.keys() for row in rows)

    idx_out = tmp_path / "indexed.jsonl"
    assert cli_dispatch(["candidates", str(mini.path), "-o", str(idx_out),
                         "--top-k", "10"]) == 0
    assert idx_out.exists()
    assert "candidate pairs ->" in capsys.readouterr().out


def test_adjudicate_single_pair_writes_outputs(mini, tmp_path, capsys):
    source, target = mini.spec.strong_positives[0]
    verdicts = tmp_path / "verdicts.jsonl"
    traj = tmp_path / "traj.jsonl"
    code = cli_dispatch(["adjudicate", str(mini.path), source, target,
                         "-o", str(verdicts), "--trajectory", str(traj)])
    assert code == 0
    out = capsys.readouterr().out
    assert f"{source} -> {target}: YES" in out

    row = json.loads(verdicts.read_text(encoding="utf-8").splitlines()[0])
    assert row["source"] == source and row["verdict"] == "YES"
    terminal = json.loads(traj.read_text(encoding="utf-8").splitlines()[-1])
    assert terminal["terminal"] is True
    assert terminal["pair"] == f"{source}->{target}"
    assert terminal["verdict"] == "YES"


def test_adjudicate_batch_mode(mini, tmp_path, capsys):
    pos = mini.spec.strong_positives[0]
    neg = mini.spec.temporal_negatives[0]
    pairs_file = tmp_path / "pairs.jsonl"
    pairs_file.write_text(
        json.dumps({"source": pos[0], "target": pos[1]}) + "\n"
        + json.dumps({"source": neg[0], "target": neg[1]}) + "\n",
        encoding="utf-8")
    assert cli_dispatch(["adjudicate", str(mini.path),
                         "--pairs", str(pairs_file)]) == 0
    out_lines = capsys.readouterr().out.splitlines()
    assert len(out_lines) == 2
    assert ": YES" in out_lines[0]
    assert ": NO" in out_lines[1]
    assert "influence score 0.050" in out_lines[1]


def test_adjudicate_argument_validation(mini, tmp_path, capsys):
    pairs_file = tmp_path / "p.jsonl"
    pairs_file.write_text("{}\n", encoding="utf-8")
    assert cli_dispatch(["adjudicate", str(mini.path), "a", "b",
                         "--pairs", str(pairs_file)]) == 1
    assert cli_dispatch(["adjudicate", str(mini.path)]) == 1
    err = capsys.readouterr().err
    assert "not both" in err
    assert "need SOURCE and TARGET" in err


def test_adjudicate_unknown_artist_is_data_error(mini, capsys):
    assert cli_dispatch(["adjudicate", str(mini.path), "ghost", "nobody"]) == 2
    assert "unknown artists" in capsys.readouterr().err


def test_adjudicate_remote_without_endpoint_is_backend_error(mini, capsys,
                                                             monkeypatch):
    monkeypatch.delenv("ARTJUDGE_BACKEND_URL", raising=False)
    source, target = mini.spec.strong_positives[0]
    assert cli_dispatch(["adjudicate", str(mini.path), source, target,
                         "--backend", "remote"]) == 3
    assert "backend error:" in capsys.readouterr().err


def test_missing_config_file_is_data_error(mini, capsys):
    # index build is the cheapest command that actually resolves the config
    assert cli_dispatch(["--config", "/nonexistent/cfg.toml",
                         "index", "build", str(mini.path)]) == 2
    assert "config file not found" in capsys.readouterr().err


def test_config_file_overrides_apply(mini, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"candidates": {"top_k": 2,
                                              "min_similarity": 0.99}}),
                   encoding="utf-8")
    out_file = tmp_path / "cands.jsonl"
    assert cli_dispatch(["--config", str(cfg), "candidates", str(mini.path),
                         "-o", str(out_file), "--exact"]) == 0
    strict = len(out_file.read_text(encoding="utf-8").splitlines())

    assert cli_dispatch(["candidates", str(mini.path), "-o", str(out_file),
                         "--exact"]) == 0
    relaxed = len(out_file.read_text(encoding="utf-8").splitlines())
    assert strict < relaxed


def test_bench_run_writes_report(mini, tmp_path, capsys):
    out_dir = tmp_path / "report"
    code = cli_dispatch(["bench", "run", str(mini.path), "-o", str(out_dir),
                         "--folds", "5", "--no-figures"])
    assert code == 0
    out = capsys.readouterr().out
    assert "mcc:" in out
    for name in ("metrics.json", "metrics.csv", "verdicts.jsonl",
                 "roc_points.csv", "trajectories.jsonl"):
        assert (out_dir / name).exists(), name
    metrics = json.loads((out_dir / "metrics.json").read_text(encoding="utf-8"))
    assert metrics["aggregate"]["mcc"]["mean"] > 0.5


def test_bench_run_renders_figures(mini, tmp_path):
    out_dir = tmp_path / "report_fig"
    assert cli_dispatch(["bench", "run", str(mini.path), "-o", str(out_dir),
                         "--folds", "5"]) == 0
    for name in ("roc_curve.png", "tier_rejection.png", "score_histogram.png"):
        path = out_dir / name
        assert path.exists(), name
        assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_bench_sweep_table_and_csv(mini, tmp_path, capsys):
    csv_out = tmp_path / "sweep.csv"
    assert cli_dispatch(["bench", "sweep", str(mini.path),
                         "--gammas", "0,2", "-o", str(csv_out)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].split() == ["gamma", "recall", "specificity", "mcc"]
    header = csv_out.read_text(encoding="utf-8").splitlines()[0]
    assert header.startswith("gamma,")

    assert cli_dispatch(["bench", "sweep", str(mini.path),
                         "--gammas", "a,b"]) == 1
    assert cli_dispatch(["bench", "sweep", str(mini.path), "--gammas", ","]) == 1


def test_bench_ablate_single_arm(mini, tmp_path, capsys):
    out_dir = tmp_path / "ablate"
    assert cli_dispatch(["bench", "ablate", str(mini.path), "-o", str(out_dir),
                         "-s", "gamma=0"]) == 0
    out = capsys.readouterr().out
    assert "baseline mcc:" in out
    assert "gamma=0: mcc delta" in out
    assert (out_dir / "ablation.json").exists()
    assert (out_dir / "ablation.csv").exists()


def test_graph_export_command(mini, tmp_path, capsys):
    out_dir = tmp_path / "graph"
    assert cli_dispatch(["graph", "export", str(mini.path),
                         "-o", str(out_dir)]) == 0
    out = capsys.readouterr().out
    assert "nodes" in out and "edges" in out
    for name in ("graph.json", "graph_merge.cypher", "nodes.csv", "edges.csv"):
        assert (out_dir / name).exists(), name

    only_json = tmp_path / "graph_json"
    assert cli_dispatch(["graph", "export", str(mini.path), "-o", str(only_json),
                         "--format", "json"]) == 0
    assert (only_json / "graph.json").exists()
    assert not (only_json / "graph_merge.cypher").exists()


def test_manifold_inspect_writes_csvs(mini, tmp_path, capsys):
    out_dir = tmp_path / "manifold"
    assert cli_dispatch(["manifold", "inspect", str(mini.path),
                         "-o", str(out_dir)]) == 0
    assert "axes over dim" in capsys.readouterr().out
    gram_header = (out_dir / "gram.csv").read_text(encoding="utf-8").splitlines()[0]
    assert gram_header == ",axis1,axis2,axis3,axis4,axis5"
    assert (out_dir / "coords.csv").exists()


def test_iconclass_dist_output(tmp_path, capsys):
    corpus = tmp_path / "codes_only"
    corpus.mkdir()
    (corpus / "iconclass.txt").write_text("7\n73\n73D\n73D1\n73D14\n",
                                          encoding="utf-8")
    assert cli_dispatch(["iconclass", "dist", str(corpus), "73D14", "73"]) == 0
    out = capsys.readouterr().out
    assert "distance(73D14, 73) = 1.920000" in out
    assert "meet 73 at depth 2, 3 up + 0 down" in out

    assert cli_dispatch(["iconclass", "dist", str(corpus), "73D14", "99"]) == 2
    assert "data error:" in capsys.readouterr().err


def test_iconclass_dist_decay_override(tmp_path, capsys):
    corpus = tmp_path / "codes_only"
    corpus.mkdir()
    (corpus / "iconclass.txt").write_text("7\n73\n73D\n73D1\n73D14\n",
                                          encoding="utf-8")
    assert cli_dispatch(["iconclass", "dist", str(corpus), "73D14", "73",
                         "--decay", "1.0"]) == 0
    assert "= 3.000000" in capsys.readouterr().out
