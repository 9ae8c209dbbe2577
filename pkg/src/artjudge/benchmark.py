"""Benchmark dataset handling and evaluation metrics.

Datasets are labeled directed pairs, balanced between positives and
negatives, with negatives tiered by difficulty. Folding is stratified by
(label, tier) and deterministic under a seed. Metrics come straight from the
confusion counts; degenerate denominators yield 0 by convention, never NaN.
ROC-AUC is trapezoidal over the tie-grouped curve, which equals pairwise
concordance probability with half credit for ties.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import DirectedPair, Label, Tier, Verdict, pairs_from_rows
from .errors import (
    DataError,
    ImbalanceError,
    LengthMismatchError,
    MissingTierError,
    StratificationError,
)


@dataclass
class BenchmarkDataset:
    pairs: tuple[DirectedPair, ...]

    @property
    def positives(self) -> int:
        return sum(1 for p in self.pairs if p.label is Label.POSITIVE)

    @property
    def negatives(self) -> int:
        return sum(1 for p in self.pairs if p.label is Label.NEGATIVE)

    def tier_counts(self) -> dict[Tier, int]:
        out: dict[Tier, int] = {}
        for p in self.pairs:
            if p.label is Label.NEGATIVE and p.tier is not None:
                out[p.tier] = out.get(p.tier, 0) + 1
        return out


def load_dataset(path: str | Path, balanced: bool = True) -> BenchmarkDataset:
    """Labeled pairs from a JSON document ({"pairs": [...]}) or JSON Lines.

    Every pair must carry a label; negatives should carry tiers. In balanced
    mode unequal class counts raise ImbalanceError.
    """
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    rows: list[Mapping]
    if p.suffix == ".jsonl":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        pairs = pairs_from_rows(rows)
    else:
        doc = json.loads(text)
        pairs = [DirectedPair(
            source=str(r["source_artist_id"]), target=str(r["target_artist_id"]),
            label=Label(r["label"]) if r.get("label") else None,
            tier=Tier(r["tier"]) if r.get("tier") else None,
        ) for r in doc["pairs"]]
    unlabeled = [p.key for p in pairs if p.label is None]
    if unlabeled:
        raise DataError(f"{len(unlabeled)} unlabeled pairs (first: {unlabeled[0]})")
    dataset = BenchmarkDataset(pairs=tuple(pairs))
    if balanced and dataset.positives != dataset.negatives:
        raise ImbalanceError(
            f"balanced dataset expected, got {dataset.positives} positives / "
            f"{dataset.negatives} negatives")
    return dataset


@dataclass
class FoldSpec:
    k: int
    seed: int
    assignment: dict[str, int]           # pair key -> fold

    def fold_of(self, pair: DirectedPair) -> int:
        return self.assignment[pair.key]

    def members(self, fold: int, pairs: Iterable[DirectedPair]) -> list[DirectedPair]:
        return [p for p in pairs if self.assignment[p.key] == fold]


def make_folds(dataset: BenchmarkDataset, k: int = 5, seed: int = 0,
               label_tol: float = 0.02, tier_tol: float = 0.05) -> FoldSpec:
    """Stratified fold assignment by (label, tier).

    Each stratum is shuffled deterministically and dealt round-robin starting
    at a stratum-dependent offset, so remainders spread across folds. The
    invariants - per-fold positive ratio within `label_tol` of the global
    ratio and per-fold tier proportion within `tier_tol` - are verified after
    assignment; violation raises StratificationError.
    """
    if k < 2:
        raise DataError(f"need at least 2 folds, got {k}")
    if len(dataset.pairs) < k:
        raise StratificationError(f"{len(dataset.pairs)} pairs cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    strata: dict[tuple, list[DirectedPair]] = {}
    for pair in dataset.pairs:
        strata.setdefault((pair.label, pair.tier), []).append(pair)

    assignment: dict[str, int] = {}
    for idx, key in enumerate(sorted(strata, key=lambda t: (str(t[0]), str(t[1])))):
        members = sorted(strata[key], key=lambda p: p.key)
        order = rng.permutation(len(members))
        for j, pos in enumerate(order.tolist()):
            assignment[members[pos].key] = (j + idx) % k

    spec = FoldSpec(k=k, seed=seed, assignment=assignment)

    total = len(dataset.pairs)
    global_pos = dataset.positives / total
    tier_counts = dataset.tier_counts()
    negatives = dataset.negatives
    for fold in range(k):
        members = spec.members(fold, dataset.pairs)
        if not members:
            raise StratificationError(f"fold {fold} is empty")
        pos_ratio = sum(1 for p in members if p.label is Label.POSITIVE) / len(members)
        if abs(pos_ratio - global_pos) > label_tol + 1e-9:
            raise StratificationError(
                f"fold {fold} positive ratio {pos_ratio:.3f} vs global {global_pos:.3f} "
                f"exceeds {label_tol}")
        fold_negs = [p for p in members if p.label is Label.NEGATIVE]
        if negatives and fold_negs:
            for tier, count in tier_counts.items():
                g = count / negatives
                f = sum(1 for p in fold_negs if p.tier is tier) / len(fold_negs)
                if abs(f - g) > tier_tol + 1e-9:
                    raise StratificationError(
                        f"fold {fold} tier {tier.value} share {f:.3f} vs global {g:.3f} "
                        f"exceeds {tier_tol}")
    return spec


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass
class MetricBundle:
    tp: int
    fp: int
    tn: int
    fn: int
    auc: float | None = None

    @staticmethod
    def _safe(num: float, den: float) -> float:
        return num / den if den else 0.0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def precision(self) -> float:
        return self._safe(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return self._safe(self.tp, self.tp + self.fn)

    @property
    def specificity(self) -> float:
        return self._safe(self.tn, self.tn + self.fp)

    @property
    def balanced_accuracy(self) -> float:
        return (self.recall + self.specificity) / 2.0

    @property
    def f1_positive(self) -> float:
        return self._safe(2 * self.tp, 2 * self.tp + self.fp + self.fn)

    @property
    def f1_negative(self) -> float:
        return self._safe(2 * self.tn, 2 * self.tn + self.fn + self.fp)

    @property
    def macro_f1(self) -> float:
        return (self.f1_positive + self.f1_negative) / 2.0

    @property
    def mcc(self) -> float:
        """Matthews correlation; 0 when any marginal is empty."""
        tp, fp, tn, fn = (float(self.tp), float(self.fp), float(self.tn), float(self.fn))
        denom = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
        if denom == 0.0:
            return 0.0
        return (tp * tn - fp * fn) / denom

    def to_json(self) -> dict[str, float]:
        out = {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "precision": self.precision, "recall": self.recall,
            "specificity": self.specificity,
            "balanced_accuracy": self.balanced_accuracy,
            "f1_positive": self.f1_positive, "f1_negative": self.f1_negative,
            "macro_f1": self.macro_f1, "mcc": self.mcc,
        }
        if self.auc is not None:
            out["auc"] = self.auc
        return out


def compute_metrics(verdicts: Sequence[Verdict], labels: Sequence[Label],
                    scores: Sequence[float] | None = None) -> MetricBundle:
    if len(verdicts) != len(labels):
        raise LengthMismatchError(f"{len(verdicts)} verdicts vs {len(labels)} labels")
    if scores is not None and len(scores) != len(labels):
        raise LengthMismatchError(f"{len(scores)} scores vs {len(labels)} labels")
    tp = fp = tn = fn = 0
    for verdict, label in zip(verdicts, labels):
        if label is Label.POSITIVE:
            if verdict is Verdict.YES:
                tp += 1
            else:
                fn += 1
        elif label is Label.NEGATIVE:
            if verdict is Verdict.YES:
                fp += 1
            else:
                tn += 1
        else:
            raise DataError("compute_metrics requires labeled pairs")
    auc = roc_auc(scores, labels) if scores is not None else None
    return MetricBundle(tp=tp, fp=fp, tn=tn, fn=fn, auc=auc)


def roc_points(scores: Sequence[float], labels: Sequence[Label]) -> list[tuple[float, float, float]]:
    """(threshold, fpr, tpr) walking thresholds down the distinct scores.

    Tied scores move the curve diagonally in one step, which is what makes
    the trapezoidal area match concordance-with-half-tie-credit exactly.
    Starts at (inf, 0, 0); the last point sits at the lowest score with
    fpr == tpr == 1.
    """
    if len(scores) != len(labels):
        raise LengthMismatchError(f"{len(scores)} scores vs {len(labels)} labels")
    pos = sum(1 for l in labels if l is Label.POSITIVE)
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        raise DataError("ROC needs both classes present")
    by_score: dict[float, list[int]] = {}
    for s, l in zip(scores, labels):
        bucket = by_score.setdefault(float(s), [0, 0])
        bucket[0 if l is Label.POSITIVE else 1] += 1
    points = [(math.inf, 0.0, 0.0)]
    cum_tp = cum_fp = 0
    for s in sorted(by_score, reverse=True):
        p_count, n_count = by_score[s]
        cum_tp += p_count
        cum_fp += n_count
        points.append((s, cum_fp / neg, cum_tp / pos))
    return points


def roc_auc(scores: Sequence[float], labels: Sequence[Label]) -> float:
    """Trapezoidal area under the tie-grouped ROC curve."""
    pts = roc_points(scores, labels)
    auc = 0.0
    for (_, x0, y0), (_, x1, y1) in zip(pts, pts[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return auc


def concordance_auc(scores: Sequence[float], labels: Sequence[Label]) -> float:
    """Brute-force pairwise concordance with half credit for ties (oracle)."""
    pos = [s for s, l in zip(scores, labels) if l is Label.POSITIVE]
    neg = [s for s, l in zip(scores, labels) if l is Label.NEGATIVE]
    if not pos or not neg:
        raise DataError("concordance needs both classes present")
    total = 0.0
    for ps in pos:
        for ns in neg:
            if ps > ns:
                total += 1.0
            elif ps == ns:
                total += 0.5
    return total / (len(pos) * len(neg))


def always_yes_bundle(labels: Sequence[Label]) -> MetricBundle:
    """The degenerate baseline that answers YES to everything."""
    tp = sum(1 for l in labels if l is Label.POSITIVE)
    fp = sum(1 for l in labels if l is Label.NEGATIVE)
    return MetricBundle(tp=tp, fp=fp, tn=0, fn=0)


@dataclass
class TierRejection:
    rates: dict[Tier, float]
    counts: dict[Tier, int]
    overall_specificity: float


def tier_rejection(verdicts: Sequence[Verdict], pairs: Sequence[DirectedPair]) -> TierRejection:
    """NO-rate per negative tier; their weighted mean IS the specificity."""
    if len(verdicts) != len(pairs):
        raise LengthMismatchError(f"{len(verdicts)} verdicts vs {len(pairs)} pairs")
    per_tier: dict[Tier, list[int]] = {}
    rejected_total = 0
    negative_total = 0
    for verdict, pair in zip(verdicts, pairs):
        if pair.label is not Label.NEGATIVE:
            continue
        if pair.tier is None:
            raise MissingTierError(f"negative pair {pair.key} has no tier")
        bucket = per_tier.setdefault(pair.tier, [0, 0])
        bucket[1] += 1
        negative_total += 1
        if verdict is Verdict.NO:
            bucket[0] += 1
            rejected_total += 1
    rates = {tier: counts[0] / counts[1] for tier, counts in per_tier.items()}
    counts = {tier: c[1] for tier, c in per_tier.items()}
    overall = rejected_total / negative_total if negative_total else 0.0
    return TierRejection(rates=rates, counts=counts, overall_specificity=overall)


def tune_threshold(scores: Sequence[float], labels: Sequence[Label]) -> float:
    """Pick the decision threshold maximizing MCC on a development split.

    Candidates are the distinct observed scores (the empirical quantiles);
    ties in MCC resolve toward the smaller threshold so the rule is total.
    """
    if len(scores) != len(labels):
        raise LengthMismatchError(f"{len(scores)} scores vs {len(labels)} labels")
    if not scores:
        raise DataError("cannot tune a threshold on an empty split")
    best_theta = None
    best_mcc = -math.inf
    for theta in sorted(set(float(s) for s in scores)):
        verdicts = [Verdict.YES if s > theta else Verdict.NO for s in scores]
        mcc = compute_metrics(verdicts, labels).mcc
        if mcc > best_mcc + 1e-12:
            best_mcc = mcc
            best_theta = theta
    return float(best_theta)
