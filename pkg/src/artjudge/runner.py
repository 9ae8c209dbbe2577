"""Benchmark orchestration: run pairs, score folds, write reports.

Every pair is adjudicated exactly once; the cross-validation rounds then
reuse the frozen influence scores. Each round holds out one fold as the
development split (threshold tuning happens there, when enabled) and scores
the remaining folds. A pair whose backend errored out yields no verdict and
is counted as wrong at every threshold, which keeps flaky backends from
silently inflating metrics.

Reports are fully deterministic: no timestamps, sorted JSON keys, fixed
float formatting, pairs emitted in dataset order. Figures are rendered with
the Agg backend so the PNGs are reproducible byte for byte on a given
matplotlib install.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .agent import Trajectory, adjudicate_pair
from .backends import Backend, make_backends
from .benchmark import (
    BenchmarkDataset,
    FoldSpec,
    MetricBundle,
    TierRejection,
    always_yes_bundle,
    compute_metrics,
    make_folds,
    roc_auc,
    roc_points,
    tier_rejection,
    tune_threshold,
)
from .config import RunConfig
from .core import DirectedPair, Label, Tier, Verdict
from .engine import Engine, build_engine
from .errors import BackendError, DataError, UnknownSwitchError
from .tools import (
    TOOL_BIOGRAPHY,
    TOOL_CONCEPT,
    TOOL_STYLE,
    TOOL_TIMELINE,
    TOOL_VISUAL,
)

METRIC_KEYS = ("tp", "fp", "tn", "fn", "precision", "recall", "specificity",
               "balanced_accuracy", "f1_positive", "f1_negative", "macro_f1",
               "mcc", "auc")


@dataclass
class PairOutcome:
    pair: DirectedPair
    verdict: Verdict | None
    confidence: float | None
    influence_score: float | None
    error: str | None = None

    def predicted(self, threshold: float) -> Verdict:
        """Re-threshold the frozen score; an errored pair is always wrong."""
        if self.error is not None or self.influence_score is None:
            return Verdict.YES if self.pair.label is Label.NEGATIVE else Verdict.NO
        return Verdict.YES if self.influence_score > threshold else Verdict.NO

    def to_json(self) -> dict:
        return {
            "pair": self.pair.key,
            "source": self.pair.source,
            "target": self.pair.target,
            "label": self.pair.label.value if self.pair.label else None,
            "tier": self.pair.tier.value if self.pair.tier else None,
            "verdict": self.verdict.value if self.verdict else None,
            "confidence": self.confidence,
            "influence_score": self.influence_score,
            "error": self.error,
        }


@dataclass
class RoundResult:
    round_index: int
    threshold: float
    dev_size: int
    eval_size: int
    bundle: MetricBundle

    def to_json(self) -> dict:
        return {"round": self.round_index, "threshold": self.threshold,
                "dev_size": self.dev_size, "eval_size": self.eval_size,
                **self.bundle.to_json()}


@dataclass
class BenchmarkReport:
    outcomes: list[PairOutcome]
    folds: FoldSpec
    rounds: list[RoundResult]
    aggregate: dict[str, dict[str, float]]
    always_yes: dict[str, float]
    tiers: TierRejection
    roc: list[tuple[float, float, float]]
    auc: float
    config: dict
    trajectory_lines: list[str] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "dataset": {
                "pairs": len(self.outcomes),
                "positives": sum(1 for o in self.outcomes
                                 if o.pair.label is Label.POSITIVE),
                "negatives": sum(1 for o in self.outcomes
                                 if o.pair.label is Label.NEGATIVE),
                "errors": sum(1 for o in self.outcomes if o.error is not None),
            },
            "folds": {"k": self.folds.k, "seed": self.folds.seed},
            "rounds": [r.to_json() for r in self.rounds],
            "aggregate": self.aggregate,
            "always_yes": self.always_yes,
            "tier_rejection": {
                "rates": {t.value: r for t, r in sorted(self.tiers.rates.items(),
                                                        key=lambda kv: kv[0].value)},
                "counts": {t.value: c for t, c in sorted(self.tiers.counts.items(),
                                                         key=lambda kv: kv[0].value)},
                "overall_specificity": self.tiers.overall_specificity,
            },
            "auc": self.auc,
        }


def run_pairs(engine: Engine, controller: Backend, critic: Backend,
              pairs: Sequence[DirectedPair],
              trajectory_lines: list[str] | None = None) -> list[PairOutcome]:
    """Adjudicate every pair once, in order; backend failures become outcomes."""
    outcomes: list[PairOutcome] = []
    sink = None
    if trajectory_lines is not None:
        def sink(traj: Trajectory) -> None:
            trajectory_lines.extend(traj.lines())
    for pair in pairs:
        try:
            verdict = adjudicate_pair(pair, engine.registry, controller, critic,
                                      config=engine.config.agent,
                                      trajectory_sink=sink)
        except BackendError as exc:
            outcomes.append(PairOutcome(pair=pair, verdict=None, confidence=None,
                                        influence_score=None,
                                        error=f"{type(exc).__name__}: {exc}"))
            continue
        outcomes.append(PairOutcome(pair=pair, verdict=verdict.verdict,
                                    confidence=verdict.confidence,
                                    influence_score=verdict.influence_score))
    return outcomes


def _scored(outcomes: Sequence[PairOutcome]) -> list[PairOutcome]:
    return [o for o in outcomes if o.error is None and o.influence_score is not None]


def evaluate_rounds(outcomes: Sequence[PairOutcome], folds: FoldSpec,
                    tune: bool, default_threshold: float) -> list[RoundResult]:
    """One round per fold: that fold is the dev split, the rest are scored."""
    rounds: list[RoundResult] = []
    for r in range(folds.k):
        dev = [o for o in outcomes if folds.fold_of(o.pair) == r]
        eval_ = [o for o in outcomes if folds.fold_of(o.pair) != r]
        if tune:
            dev_ok = _scored(dev)
            if not dev_ok:
                raise DataError(f"round {r}: no scored pairs in the dev fold")
            theta = tune_threshold([o.influence_score for o in dev_ok],
                                   [o.pair.label for o in dev_ok])
        else:
            theta = default_threshold
        verdicts = [o.predicted(theta) for o in eval_]
        labels = [o.pair.label for o in eval_]
        bundle = compute_metrics(verdicts, labels)
        eval_ok = _scored(eval_)
        auc = roc_auc([o.influence_score for o in eval_ok],
                      [o.pair.label for o in eval_ok]) if eval_ok else 0.0
        bundle = dataclasses.replace(bundle, auc=auc)
        rounds.append(RoundResult(round_index=r, threshold=theta,
                                  dev_size=len(dev), eval_size=len(eval_),
                                  bundle=bundle))
    return rounds


def aggregate_rounds(rounds: Sequence[RoundResult]) -> dict[str, dict[str, float]]:
    """Mean and population standard deviation per metric across rounds."""
    table: dict[str, dict[str, float]] = {}
    columns = {key: [r.bundle.to_json().get(key) for r in rounds] for key in METRIC_KEYS}
    columns["threshold"] = [r.threshold for r in rounds]
    for key, values in columns.items():
        values = [v for v in values if v is not None]
        if not values:
            continue
        arr = np.asarray(values, dtype=np.float64)
        table[key] = {"mean": float(arr.mean()), "std": float(arr.std())}
    return table


def run_benchmark(corpus_dir: str | Path, config: RunConfig | None = None,
                  out_dir: str | Path | None = None,
                  backends: tuple[Backend, Backend] | None = None,
                  engine: Engine | None = None,
                  folds: FoldSpec | None = None,
                  write_figures: bool = True) -> BenchmarkReport:
    """Full benchmark run over the corpus's labeled pairs.

    Pass `engine`/`folds` to reuse previously built state (ablation arms do,
    so every arm scores identical splits). With `out_dir` set the report is
    written to disk: metrics.json / metrics.csv / verdicts.jsonl /
    roc_points.csv / trajectories.jsonl plus three PNG figures.
    """
    cfg = config or RunConfig()
    eng = engine or build_engine(corpus_dir, cfg)
    pairs = list(eng.corpus.pairs)
    if not pairs:
        raise DataError("corpus has no pairs to benchmark")
    for pair in pairs:
        if pair.label is None:
            raise DataError(f"pair {pair.key} is unlabeled; benchmarks need labels")
    dataset = BenchmarkDataset(pairs=tuple(pairs))
    spec = folds or make_folds(dataset, k=cfg.bench.folds, seed=cfg.bench.seed)
    controller, critic = backends or make_backends(cfg.bench.backend, cfg.remote)

    trajectory_lines: list[str] = []
    outcomes = run_pairs(eng, controller, critic, pairs, trajectory_lines)

    rounds = evaluate_rounds(outcomes, spec, tune=cfg.bench.tune_threshold,
                             default_threshold=cfg.agent.decision_threshold)
    aggregate = aggregate_rounds(rounds)

    labels = [o.pair.label for o in outcomes]
    baseline = always_yes_bundle(labels)
    scored = _scored(outcomes)
    curve = roc_points([o.influence_score for o in scored],
                       [o.pair.label for o in scored]) if scored else []
    auc = roc_auc([o.influence_score for o in scored],
                  [o.pair.label for o in scored]) if scored else 0.0
    engine_verdicts = [o.verdict if o.verdict is not None
                       else o.predicted(cfg.agent.decision_threshold)
                       for o in outcomes]
    tiers = tier_rejection(engine_verdicts, pairs)

    report = BenchmarkReport(outcomes=outcomes, folds=spec, rounds=rounds,
                             aggregate=aggregate,
                             always_yes=baseline.to_json(), tiers=tiers,
                             roc=curve, auc=auc, config=cfg.resolved(),
                             trajectory_lines=trajectory_lines)
    if out_dir is not None:
        write_report(report, out_dir, figures=write_figures)
    return report


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------

def _fmt(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return f"{value:.6f}"


def render_metrics_csv(report: BenchmarkReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["round", "threshold", *METRIC_KEYS])
    for r in report.rounds:
        row = r.bundle.to_json()
        writer.writerow([r.round_index, _fmt(r.threshold),
                         *[_fmt(row.get(k)) for k in METRIC_KEYS]])
    for stat in ("mean", "std"):
        writer.writerow([stat,
                         _fmt(report.aggregate.get("threshold", {}).get(stat)),
                         *[_fmt(report.aggregate.get(k, {}).get(stat))
                           for k in METRIC_KEYS]])
    return buf.getvalue()


def render_roc_csv(report: BenchmarkReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["threshold", "fpr", "tpr"])
    for threshold, fpr, tpr in report.roc:
        writer.writerow(["inf" if threshold == float("inf") else _fmt(threshold),
                         _fmt(fpr), _fmt(tpr)])
    return buf.getvalue()


def write_report(report: BenchmarkReport, out_dir: str | Path,
                 figures: bool = True) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(
        json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    (out / "metrics.csv").write_text(render_metrics_csv(report), encoding="utf-8")
    (out / "verdicts.jsonl").write_text(
        "".join(json.dumps(o.to_json(), sort_keys=True) + "\n"
                for o in report.outcomes), encoding="utf-8")
    (out / "roc_points.csv").write_text(render_roc_csv(report), encoding="utf-8")
    (out / "trajectories.jsonl").write_text(
        "".join(line + "\n" for line in report.trajectory_lines), encoding="utf-8")
    if figures:
        render_figures(report, out)


_TIER_ORDER = (Tier.HARD, Tier.MEDIUM, Tier.EASY, Tier.TEMPORAL_IMPOSSIBLE)


def render_figures(report: BenchmarkReport, out_dir: str | Path) -> list[Path]:
    """ROC curve, per-tier rejection bars, and the score histogram as PNGs."""
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    plt.rcParams.update({"figure.dpi": 100, "savefig.dpi": 100, "font.size": 10,
                         "svg.hashsalt": "artjudge"})
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    if report.roc:
        ax.plot([p[1] for p in report.roc], [p[2] for p in report.roc],
                drawstyle="steps-post", color="#2a6f97", linewidth=1.6)
    ax.plot([0, 1], [0, 1], linestyle="--", color="#999999", linewidth=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"ROC, area {report.auc:.3f}")
    fig.tight_layout()
    path = out / "roc_curve.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    tiers = [t for t in _TIER_ORDER if t in report.tiers.rates]
    rates = [report.tiers.rates[t] for t in tiers]
    ax.bar(range(len(tiers)), rates, color="#52796f")
    ax.set_xticks(range(len(tiers)))
    ax.set_xticklabels([t.value for t in tiers], rotation=20, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("rejection rate")
    ax.set_title("negative rejection by tier")
    fig.tight_layout()
    path = out / "tier_rejection.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    bins = np.linspace(0.0, 1.0, 21)
    pos = [o.influence_score for o in report.outcomes
           if o.error is None and o.pair.label is Label.POSITIVE]
    neg = [o.influence_score for o in report.outcomes
           if o.error is None and o.pair.label is Label.NEGATIVE]
    ax.hist(pos, bins=bins, alpha=0.6, label="positive", color="#2a6f97")
    ax.hist(neg, bins=bins, alpha=0.6, label="negative", color="#bc4749")
    ax.set_xlabel("influence score")
    ax.set_ylabel("pairs")
    ax.legend()
    ax.set_title("score distribution by label")
    fig.tight_layout()
    path = out / "score_histogram.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)
    return written


# ---------------------------------------------------------------------------
# ablations
# ---------------------------------------------------------------------------

_TOOL_SWITCHES = {
    "no_visual": TOOL_VISUAL,
    "no_biography": TOOL_BIOGRAPHY,
    "no_timeline": TOOL_TIMELINE,
    "no_style": TOOL_STYLE,
    "no_concept": TOOL_CONCEPT,
}


@dataclass
class AblationArm:
    switch: str
    aggregate: dict[str, dict[str, float]]
    delta: dict[str, float]


@dataclass
class AblationReport:
    baseline: dict[str, dict[str, float]]
    arms: list[AblationArm]
    config: dict

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "baseline": self.baseline,
            "arms": {arm.switch: {"aggregate": arm.aggregate, "delta": arm.delta}
                     for arm in self.arms},
        }


def _arm_config(cfg: RunConfig, switch: str) -> tuple[RunConfig, dict]:
    """Translate one switch string into (config, build_engine kwargs)."""
    if switch in _TOOL_SWITCHES:
        return cfg, {"disable_tool": _TOOL_SWITCHES[switch]}
    if switch == "masked_bios":
        return cfg, {"mask_biographies": True}
    if switch == "generic_prompts":
        return cfg, {"generic_prompts": True}
    if switch.startswith("gamma="):
        try:
            value = float(switch.split("=", 1)[1])
        except ValueError as exc:
            raise UnknownSwitchError(f"bad gamma value in {switch!r}") from exc
        if value < 0:
            raise UnknownSwitchError(f"gamma must be >= 0, got {value}")
        agent = dataclasses.replace(cfg.agent, gamma=value)
        return dataclasses.replace(cfg, agent=agent), {}
    raise UnknownSwitchError(
        f"unknown ablation switch {switch!r}; expected one of "
        f"{sorted(_TOOL_SWITCHES)}, 'masked_bios', 'generic_prompts', or 'gamma=<x>'")


def ablate(corpus_dir: str | Path, switches: Sequence[str],
           config: RunConfig | None = None,
           out_dir: str | Path | None = None,
           backends: tuple[Backend, Backend] | None = None) -> AblationReport:
    """Benchmark the baseline plus one arm per switch on identical folds.

    Arms only ever turn one thing off or reparameterize the critic, so the
    deltas isolate a single component. An empty switch list reproduces the
    plain benchmark.
    """
    cfg = config or RunConfig()
    baseline_engine = build_engine(corpus_dir, cfg)
    dataset = BenchmarkDataset(pairs=tuple(baseline_engine.corpus.pairs))
    spec = make_folds(dataset, k=cfg.bench.folds, seed=cfg.bench.seed)

    base_report = run_benchmark(corpus_dir, cfg, backends=backends,
                                engine=baseline_engine, folds=spec,
                                write_figures=False)
    arms: list[AblationArm] = []
    for switch in switches:
        arm_cfg, engine_kwargs = _arm_config(cfg, switch)
        arm_engine = (build_engine(corpus_dir, arm_cfg, **engine_kwargs)
                      if engine_kwargs else
                      dataclasses.replace(baseline_engine, config=arm_cfg))
        arm_report = run_benchmark(corpus_dir, arm_cfg, backends=backends,
                                   engine=arm_engine, folds=spec,
                                   write_figures=False)
        delta = {}
        for key, stats in arm_report.aggregate.items():
            base = base_report.aggregate.get(key, {}).get("mean")
            if base is not None:
                delta[key] = stats["mean"] - base
        arms.append(AblationArm(switch=switch, aggregate=arm_report.aggregate,
                                delta=delta))

    report = AblationReport(baseline=base_report.aggregate, arms=arms,
                            config=cfg.resolved())
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ablation.json").write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        (out / "ablation.csv").write_text(render_ablation_csv(report),
                                          encoding="utf-8")
    return report


def render_ablation_csv(report: AblationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    keys = [k for k in (*METRIC_KEYS, "threshold") if k in report.baseline]
    writer.writerow(["arm", *keys])
    writer.writerow(["baseline", *[_fmt(report.baseline[k]["mean"]) for k in keys]])
    for arm in report.arms:
        writer.writerow([arm.switch,
                         *[_fmt(arm.aggregate.get(k, {}).get("mean")) for k in keys]])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# critic-strength sweep
# ---------------------------------------------------------------------------

def sweep_gamma(corpus_dir: str | Path, gammas: Sequence[float] = (0.0, 1.0, 2.0, 4.0),
                config: RunConfig | None = None,
                backends: tuple[Backend, Backend] | None = None,
                engine: Engine | None = None) -> list[dict[str, float]]:
    """Whole-dataset metrics per critic strength, at the fixed threshold.

    Threshold tuning is deliberately off here: with the cut fixed, a larger
    gamma can only push scores down, so recall cannot rise and specificity
    cannot fall as gamma grows. Tuning would re-pick the cut per arm and
    break that comparison.
    """
    cfg = config or RunConfig()
    eng = engine or build_engine(corpus_dir, cfg)
    pairs = list(eng.corpus.pairs)
    if not pairs:
        raise DataError("corpus has no pairs to sweep")
    theta = cfg.agent.decision_threshold
    rows: list[dict[str, float]] = []
    for gamma in gammas:
        agent_cfg = dataclasses.replace(cfg.agent, gamma=float(gamma))
        arm_engine = dataclasses.replace(
            eng, config=dataclasses.replace(cfg, agent=agent_cfg))
        controller, critic = backends or make_backends(cfg.bench.backend, cfg.remote)
        outcomes = run_pairs(arm_engine, controller, critic, pairs)
        verdicts = [o.predicted(theta) for o in outcomes]
        labels = [o.pair.label for o in outcomes]
        bundle = compute_metrics(verdicts, labels)
        rows.append({"gamma": float(gamma), "threshold": theta,
                     **{k: float(v) for k, v in bundle.to_json().items()}})
    return rows
