"""Command line interface.

Exit codes: 0 on success, 1 for usage mistakes, 2 for data problems
(malformed corpora, bad config, impossible requests), 3 for backend
problems (unreachable or misbehaving model endpoints).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Sequence

import click
import numpy as np

from . import __version__
from .agent import adjudicate_pair
from .backends import make_backends
from .config import RunConfig, load_config
from .core import DirectedPair, load_corpus, validate_corpus
from .engine import build_engine
from .errors import BackendError, DataError, ValidationError
from .graph_export import export_graph, materialize_graph
from .iconclass import code_distance, load_graph, lowest_common_ancestor
from .manifold import build_basis, write_coords_csv, write_gram_csv
from .retrieval import ExactScan, build_index, generate_candidates, save_candidates
from .runner import ablate, run_benchmark, sweep_gamma
from .store import read_store
from .synth import build_impossible_corpus, build_mini_corpus


@click.group(name="artjudge")
@click.version_option(version=__version__, prog_name="artjudge")
@click.option("--config", "config_path", metavar="FILE", default=None,
              help="TOML or JSON config file; flags override it.")
@click.pass_context
def cli(ctx: click.Context, config_path: str | None) -> None:
    """Adjudicate artist-influence claims over image and text embeddings."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


def _config(ctx: click.Context, overrides: dict | None = None) -> RunConfig:
    return load_config(ctx.obj.get("config_path"), overrides)


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------

@cli.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
def validate(corpus_dir: str) -> None:
    """Validate a corpus directory; findings go to stdout."""
    corpus = load_corpus(corpus_dir, strict=False)
    report = validate_corpus(corpus)
    for line in report.errors:
        click.echo(f"error: {line}")
    for line in report.warnings:
        click.echo(f"warning: {line}")
    if report.errors:
        raise ValidationError(f"{len(report.errors)} validation error(s)",
                              report=report)
    summary = (f"ok: {len(corpus.artists)} artists, {len(corpus.artworks)} artworks, "
               f"{len(corpus.pairs)} pairs, {len(corpus.documents)} documents")
    if report.warnings:
        summary += f" ({len(report.warnings)} warnings)"
    click.echo(summary)


@cli.command()
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--kind", type=click.Choice(["mini", "impossible"]), default="mini",
              show_default=True, help="Which synthetic corpus to generate.")
@click.option("--seed", type=int, default=None, help="Generator seed.")
def fixture(out_dir: str, kind: str, seed: int | None) -> None:
    """Generate a synthetic demo corpus (also used by the test suite)."""
    if kind == "mini":
        build_mini_corpus(out_dir, seed=7 if seed is None else seed)
    else:
        build_impossible_corpus(out_dir, seed=11 if seed is None else seed)
    corpus = load_corpus(out_dir)
    click.echo(f"wrote {kind} corpus to {out_dir}: {len(corpus.artists)} artists, "
               f"{len(corpus.pairs)} pairs")


# ---------------------------------------------------------------------------
# retrieval
# ---------------------------------------------------------------------------

@cli.group()
def index() -> None:
    """Approximate-neighbor index operations."""


@index.command("build")
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--self-test", "self_test", type=int, default=0, metavar="N",
              help="Also measure recall@10 against the exact scan on N queries.")
@click.pass_context
def index_build(ctx: click.Context, corpus_dir: str, self_test: int) -> None:
    """Build the graph index over the corpus's visual embeddings."""
    cfg = _config(ctx)
    store = read_store(Path(corpus_dir) / "visual.ajem")
    idx = build_index(store, cfg.index)
    dim = store.data.shape[1]
    click.echo(f"indexed {len(idx)} vectors, dim {dim}, backend {idx.backend_name}")
    if self_test > 0:
        exact = ExactScan(store)
        rng = np.random.default_rng(cfg.index.seed)
        rows = rng.choice(store.data.shape[0], size=min(self_test, store.data.shape[0]),
                          replace=False)
        hits = 0
        for row in rows.tolist():
            query = store.data[row]
            got = {key for key, _ in idx.query(query, 10)}
            want = {key for key, _ in exact.query(query, 10)}
            hits += len(got & want) / max(1, len(want))
        click.echo(f"self-test recall@10: {hits / len(rows):.4f} over {len(rows)} queries")


@cli.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False),
              help="Candidate pairs JSONL destination.")
@click.option("--exact", is_flag=True,
              help="Exhaustive portfolio cross-product instead of the index.")
@click.option("--top-k", type=int, default=None, help="Neighbors per artwork.")
@click.option("--min-similarity", type=float, default=None,
              help="Seed similarity floor (cosine).")
@click.pass_context
def candidates(ctx: click.Context, corpus_dir: str, out: str, exact: bool,
               top_k: int | None, min_similarity: float | None) -> None:
    """Propose directed pairs worth adjudicating."""
    overrides: dict = {}
    if top_k is not None:
        overrides.setdefault("candidates", {})["top_k"] = top_k
    if min_similarity is not None:
        overrides.setdefault("candidates", {})["min_similarity"] = min_similarity
    cfg = _config(ctx, overrides or None)
    corpus = load_corpus(corpus_dir)
    store = read_store(Path(corpus_dir) / "visual.ajem")
    idx = None if exact else build_index(store, cfg.index)
    found = generate_candidates(corpus, store, index=idx, config=cfg.candidates,
                                exact=exact)
    save_candidates(found, out)
    click.echo(f"{len(found)} candidate pairs -> {out}")


# ---------------------------------------------------------------------------
# adjudication
# ---------------------------------------------------------------------------

@cli.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("source", required=False)
@click.argument("target", required=False)
@click.option("--pairs", "pairs_file", type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {source, target} rows for batch mode.")
@click.option("--backend", type=click.Choice(["heuristic", "remote"]), default=None,
              help="Reasoning backend (default from config).")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None,
              help="Write verdicts as JSONL.")
@click.option("--trajectory", "trajectory_file", type=click.Path(dir_okay=False),
              default=None, help="Write step-by-step trajectories as JSONL.")
@click.option("--mask/--no-mask", "mask", default=None,
              help="Mask biography cue terms before the tools read them.")
@click.pass_context
def adjudicate(ctx: click.Context, corpus_dir: str, source: str | None,
               target: str | None, pairs_file: str | None, backend: str | None,
               out: str | None, trajectory_file: str | None,
               mask: bool | None) -> None:
    """Adjudicate one SOURCE TARGET pair, or a batch via --pairs."""
    if pairs_file and (source or target):
        raise click.UsageError("give either SOURCE TARGET or --pairs, not both")
    if not pairs_file and not (source and target):
        raise click.UsageError("need SOURCE and TARGET artist ids, or --pairs FILE")

    cfg = _config(ctx)
    engine = build_engine(corpus_dir, cfg, mask_biographies=mask)
    controller, critic = make_backends(backend or cfg.bench.backend, cfg.remote)

    if pairs_file:
        rows = [json.loads(line) for line in
                Path(pairs_file).read_text(encoding="utf-8").splitlines()
                if line.strip()]
        todo = [DirectedPair(source=r["source"], target=r["target"]) for r in rows]
    else:
        todo = [DirectedPair(source=source, target=target)]

    trajectory_lines: list[str] = []
    sink = (lambda t: trajectory_lines.extend(t.lines())) if trajectory_file else None
    results = []
    for pair in todo:
        verdict = adjudicate_pair(pair, engine.registry, controller, critic,
                                  config=engine.config.agent, trajectory_sink=sink)
        results.append((pair, verdict))
        click.echo(f"{pair.source} -> {pair.target}: {verdict.verdict.value} "
                   f"(confidence {verdict.confidence:.3f}, "
                   f"influence score {verdict.influence_score:.3f}, "
                   f"{len(verdict.evidence)} claims)")

    if out:
        lines = [json.dumps({"source": p.source, "target": p.target,
                             **v.to_json()}, sort_keys=True)
                 for p, v in results]
        Path(out).write_text("".join(l + "\n" for l in lines), encoding="utf-8")
    if trajectory_file:
        Path(trajectory_file).write_text(
            "".join(l + "\n" for l in trajectory_lines), encoding="utf-8")


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

@cli.group()
def bench() -> None:
    """Benchmark runs, ablations, and the critic-strength sweep."""


@bench.command("run")
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("-o", "--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Report directory (metrics, verdicts, curves, figures).")
@click.option("--backend", type=click.Choice(["heuristic", "remote"]), default=None)
@click.option("--folds", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--tune/--no-tune", "tune", default=None,
              help="Tune the decision threshold on each dev fold.")
@click.option("--figures/--no-figures", default=True, show_default=True)
@click.pass_context
def bench_run(ctx: click.Context, corpus_dir: str, out_dir: str,
              backend: str | None, folds: int | None, seed: int | None,
              tune: bool | None, figures: bool) -> None:
    """Cross-validated benchmark over the corpus's labeled pairs."""
    overrides: dict = {"bench": {}}
    if backend is not None:
        overrides["bench"]["backend"] = backend
    if folds is not None:
        overrides["bench"]["folds"] = folds
    if seed is not None:
        overrides["bench"]["seed"] = seed
    if tune is not None:
        overrides["bench"]["tune_threshold"] = tune
    cfg = _config(ctx, overrides if overrides["bench"] else None)
    report = run_benchmark(corpus_dir, cfg, out_dir=out_dir, write_figures=figures)
    for key in ("mcc", "balanced_accuracy", "precision", "recall", "specificity", "auc"):
        stats = report.aggregate.get(key)
        if stats:
            click.echo(f"{key}: {stats['mean']:.4f} +/- {stats['std']:.4f}")
    click.echo(f"report -> {out_dir}")


@bench.command("ablate")
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("-o", "--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("-s", "--switch", "switches", multiple=True,
              help="Arm to run: no_visual, no_biography, no_timeline, no_style, "
                   "no_concept, masked_bios, generic_prompts, or gamma=<x>. Repeatable.")
@click.pass_context
def bench_ablate(ctx: click.Context, corpus_dir: str, out_dir: str,
                 switches: tuple[str, ...]) -> None:
    """Run the benchmark once per ablation arm on identical folds."""
    cfg = _config(ctx)
    report = ablate(corpus_dir, list(switches), config=cfg, out_dir=out_dir)
    base_mcc = report.baseline.get("mcc", {}).get("mean")
    if base_mcc is not None:
        click.echo(f"baseline mcc: {base_mcc:.4f}")
    for arm in report.arms:
        delta = arm.delta.get("mcc")
        shown = f"{delta:+.4f}" if delta is not None else "n/a"
        click.echo(f"{arm.switch}: mcc delta {shown}")
    click.echo(f"report -> {out_dir}")


@bench.command("sweep")
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--gammas", default="0,1,2,4", show_default=True,
              help="Comma-separated critic strengths.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None,
              help="Optional CSV destination.")
@click.pass_context
def bench_sweep(ctx: click.Context, corpus_dir: str, gammas: str,
                out: str | None) -> None:
    """Whole-dataset metrics per critic strength, threshold fixed."""
    try:
        values = [float(g) for g in gammas.split(",") if g.strip()]
    except ValueError:
        raise click.UsageError(f"--gammas must be comma-separated numbers, got {gammas!r}")
    if not values:
        raise click.UsageError("--gammas is empty")
    cfg = _config(ctx)
    rows = sweep_gamma(corpus_dir, values, config=cfg)
    click.echo("gamma  recall  specificity  mcc")
    for row in rows:
        click.echo(f"{row['gamma']:<6g} {row['recall']:.4f}  {row['specificity']:.4f}"
                   f"       {row['mcc']:.4f}")
    if out:
        import csv as _csv
        keys = list(rows[0].keys())
        with open(out, "w", newline="", encoding="utf-8") as fh:
            writer = _csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        click.echo(f"sweep -> {out}")


# ---------------------------------------------------------------------------
# graph
# ---------------------------------------------------------------------------

@cli.group()
def graph() -> None:
    """Property-graph materialization of adjudication results."""


@graph.command("export")
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("-o", "--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--format", "formats", multiple=True,
              type=click.Choice(["json", "script", "csv"]),
              help="Export formats; default all three. Repeatable.")
@click.option("--include-artworks", is_flag=True,
              help="Also emit Artwork nodes and AUTHORED edges.")
@click.option("--backend", type=click.Choice(["heuristic", "remote"]), default=None)
@click.pass_context
def graph_export_cmd(ctx: click.Context, corpus_dir: str, out_dir: str,
                     formats: tuple[str, ...], include_artworks: bool,
                     backend: str | None) -> None:
    """Adjudicate the corpus pairs and export the influence graph."""
    cfg = _config(ctx)
    engine = build_engine(corpus_dir, cfg)
    controller, critic = make_backends(backend or cfg.bench.backend, cfg.remote)
    results = []
    skipped = 0
    for pair in engine.corpus.pairs:
        try:
            verdict = adjudicate_pair(pair, engine.registry, controller, critic,
                                      config=engine.config.agent)
        except BackendError as exc:
            skipped += 1
            click.echo(f"warning: {pair.key} skipped ({exc})", err=True)
            continue
        results.append((pair, verdict))
    built = materialize_graph(engine.corpus, results, include_artworks=include_artworks)
    written = export_graph(built, out_dir, formats=formats or ("json", "script", "csv"))
    click.echo(f"{len(built.nodes)} nodes, {len(built.edges)} edges"
               + (f", {skipped} pairs skipped" if skipped else ""))
    for path in written:
        click.echo(f"wrote {path}")


# ---------------------------------------------------------------------------
# style manifold and concept hierarchy diagnostics
# ---------------------------------------------------------------------------

@cli.group()
def manifold() -> None:
    """Style-manifold diagnostics."""


@manifold.command("inspect")
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("-o", "--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--generic-prompts", is_flag=True,
              help="Use the weakly separated prompt set instead.")
@click.pass_context
def manifold_inspect(ctx: click.Context, corpus_dir: str, out_dir: str,
                     generic_prompts: bool) -> None:
    """Write the basis Gram matrix and per-artwork coordinates as CSV."""
    cfg = _config(ctx)
    root = Path(corpus_dir)
    pole_file = root / ("poles_generic.ajem" if generic_prompts else "poles.ajem")
    poles = read_store(pole_file)
    basis = build_basis(poles, degeneracy_tol=cfg.manifold.degeneracy_tol)
    corpus = load_corpus(root)
    store = read_store(root / "visual.ajem")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_gram_csv(basis, out / "gram.csv")
    write_coords_csv(corpus, store, basis, out / "coords.csv")
    click.echo(f"{basis.k} axes over dim {basis.dim}; wrote gram.csv and coords.csv")


@cli.group()
def iconclass() -> None:
    """Concept-hierarchy diagnostics."""


@iconclass.command("dist")
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("code_a")
@click.argument("code_b")
@click.option("--decay", type=float, default=None,
              help="Depth decay; 1.0 gives plain hop counts.")
@click.pass_context
def iconclass_dist(ctx: click.Context, corpus_dir: str, code_a: str, code_b: str,
                   decay: float | None) -> None:
    """Decayed hop distance between two codes, with the meet that set it."""
    cfg = _config(ctx)
    root = Path(corpus_dir)
    edges = root / "iconclass_edges.txt"
    graph_ = load_graph(root / "iconclass.txt", edges if edges.exists() else None)
    lam = cfg.concepts.decay if decay is None else decay
    lca, up, down = lowest_common_ancestor(graph_, code_a, code_b)
    dist = code_distance(graph_, code_a, code_b, decay=lam)
    shown = lca if lca else "<root>"
    click.echo(f"distance({code_a}, {code_b}) = {dist:.6f} "
               f"[meet {shown} at depth {graph_.depth[lca]}, {up} up + {down} down, "
               f"decay {lam}]")


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def cli_dispatch(argv: Sequence[str] | None = None) -> int:
    """Run the CLI without letting click terminate the process.

    Maps exception families onto the documented exit codes; used by main()
    and directly by tests.
    """
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        cli.main(args=args, prog_name="artjudge", standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:          # --help / --version
        return int(exc.exit_code)
    except click.UsageError as exc:
        no_args = getattr(click.exceptions, "NoArgsIsHelpError", ())
        if no_args and isinstance(exc, no_args):
            click.echo(exc.format_message(), err=True)   # message is the help text
        else:
            if exc.ctx is not None:
                click.echo(exc.ctx.get_usage(), err=True)
            click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except BackendError as exc:
        click.echo(f"backend error: {exc}", err=True)
        return 3
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
