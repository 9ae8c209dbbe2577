"""Hierarchical concept codes (ICONCLASS-style) and distances over them.

Codes form a DAG: the parent of a code is its longest proper prefix present
in the vocabulary, plus any explicit extra edges. Codes with no prefix parent
hang off a virtual super-root at depth 0. Distance between two codes walks up
from both to their deepest common ancestor and discounts the hop count by
decay^depth(ancestor): disagreement deep in the hierarchy costs less than
disagreement near the root. With decay 1.0 this is the plain hop count
through the ancestor.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    CycleError,
    DataError,
    EmptySetError,
    MisalignedListsError,
    UnknownCodeError,
)

logger = logging.getLogger(__name__)

ROOT = ""   # virtual super-root, depth 0


class AlignmentLevel(str, Enum):
    EXACT_LEAF = "exact_leaf"
    ANCESTOR_L3 = "ancestor_l3"


@dataclass
class ConceptGraph:
    parents: dict[str, tuple[str, ...]]     # code -> parent codes (ROOT possible)
    depth: dict[str, int]                   # code -> longest path from ROOT

    def __contains__(self, code: str) -> bool:
        return code in self.parents

    @property
    def codes(self) -> list[str]:
        return sorted(self.parents)

    def require(self, code: str) -> None:
        if code not in self.parents:
            raise UnknownCodeError(f"concept code {code!r} not in graph")

    def ancestors_with_hops(self, code: str) -> dict[str, int]:
        """Minimum up-hop count to every ancestor, the code itself included."""
        self.require(code)
        hops = {code: 0}
        frontier = [code]
        while frontier:
            nxt = []
            for node in frontier:
                for parent in self.parents.get(node, ()):
                    step = hops[node] + 1
                    if parent not in hops or step < hops[parent]:
                        hops[parent] = step
                        nxt.append(parent)
            frontier = nxt
        return hops


def parse_graph(codes: Iterable[str],
                edges: Iterable[tuple[str, str]] = ()) -> ConceptGraph:
    """Build the DAG from a code vocabulary and optional (parent, child) edges.

    Raises UnknownCodeError for edges naming codes outside the vocabulary and
    CycleError when the combined edge set is not acyclic.
    """
    vocab = sorted({c.strip() for c in codes if c and c.strip()})
    vocab_set = set(vocab)
    parents: dict[str, set[str]] = {c: set() for c in vocab}

    for code in vocab:
        parent = None
        for cut in range(len(code) - 1, 0, -1):
            if code[:cut] in vocab_set:
                parent = code[:cut]
                break
        if parent is None:
            if len(code) > 1:
                logger.warning("concept code %r has no prefix parent; attaching to root", code)
            parents[code].add(ROOT)
        else:
            parents[code].add(parent)

    for parent, child in edges:
        if parent not in vocab_set:
            raise UnknownCodeError(f"edge parent {parent!r} not in code vocabulary")
        if child not in vocab_set:
            raise UnknownCodeError(f"edge child {child!r} not in code vocabulary")
        parents[child].add(parent)

    # topological depth; also the cycle check
    depth: dict[str, int] = {ROOT: 0}
    remaining = dict(parents)
    while remaining:
        progressed = []
        for code, ps in remaining.items():
            real = [p for p in ps if p != ROOT]
            if all(p in depth for p in real):
                depth[code] = 1 + max((depth[p] for p in real), default=0)
                progressed.append(code)
        if not progressed:
            cycle = ", ".join(sorted(remaining)[:5])
            raise CycleError(f"concept edges contain a cycle involving: {cycle}")
        for code in progressed:
            del remaining[code]

    return ConceptGraph(parents={c: tuple(sorted(ps)) for c, ps in parents.items()},
                        depth=depth)


def load_graph(codes_path: str | Path, edges_path: str | Path | None = None) -> ConceptGraph:
    """Parse from a codes file (one code per line) and optional edge file.

    Edge file lines are 'parent<TAB>child'; blank lines and '#' comments are
    skipped in both files.
    """
    lines = Path(codes_path).read_text(encoding="utf-8").splitlines()
    codes = [ln.strip() for ln in lines if ln.strip() and not ln.strip().startswith("#")]
    edges: list[tuple[str, str]] = []
    if edges_path is not None and Path(edges_path).exists():
        for ln in Path(edges_path).read_text(encoding="utf-8").splitlines():
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            parts = ln.split("\t")
            if len(parts) != 2:
                raise UnknownCodeError(f"edge line not 'parent<TAB>child': {ln!r}")
            edges.append((parts[0].strip(), parts[1].strip()))
    return parse_graph(codes, edges)


def lowest_common_ancestor(graph: ConceptGraph, code_a: str, code_b: str) -> tuple[str, int, int]:
    """Deepest common ancestor and the up-hops from each code to it.

    Depth ties break toward the lexicographically smallest code so the choice
    is deterministic on multi-parent graphs.
    """
    hops_a = graph.ancestors_with_hops(code_a)
    hops_b = graph.ancestors_with_hops(code_b)
    common = set(hops_a) & set(hops_b)
    best = min(common, key=lambda c: (-graph.depth.get(c, 0), c))
    return best, hops_a[best], hops_b[best]


def code_distance(graph: ConceptGraph, code_a: str, code_b: str,
                  decay: float = 0.8) -> float:
    """Hop count through the deepest common ancestor, depth-discounted.

    distance = (up_hops + down_hops) * decay ** depth(ancestor). Symmetric,
    zero exactly on identical codes, and equal to the undirected hop count
    when decay == 1.
    """
    if decay <= 0:
        raise DataError(f"decay must be positive, got {decay}")
    lca, up_a, up_b = lowest_common_ancestor(graph, code_a, code_b)
    return float((up_a + up_b) * decay ** graph.depth.get(lca, 0))


def directed_set_distance(graph: ConceptGraph, from_codes: Iterable[str],
                          to_codes: Iterable[str], decay: float = 0.8) -> float:
    """Mean over `from_codes` of the distance to its nearest `to_codes` member.

    Asymmetric by construction; callers wanting both directions call twice.
    """
    src = sorted(set(from_codes))
    dst = sorted(set(to_codes))
    if not src or not dst:
        raise EmptySetError("directed set distance over an empty code set")
    total = 0.0
    for a in src:
        total += min(code_distance(graph, a, b, decay) for b in dst)
    return total / len(src)


def normalize_codes(graph: ConceptGraph, codes: Iterable[str], min_level: int = 3) -> set[str]:
    """Input codes plus all their ancestors at depth >= min_level."""
    out: set[str] = set()
    for code in codes:
        graph.require(code)
        out.add(code)
        for anc in graph.ancestors_with_hops(code):
            if anc != ROOT and graph.depth.get(anc, 0) >= min_level:
                out.add(anc)
    return out


@dataclass
class AlignmentScores:
    precision: float
    recall: float
    f1: float
    matched_predicted: int = 0
    total_predicted: int = 0
    matched_gold: int = 0
    total_gold: int = 0


def _deep_ancestors(graph: ConceptGraph, code: str, min_level: int) -> frozenset[str]:
    return frozenset(a for a in graph.ancestors_with_hops(code)
                     if a != ROOT and graph.depth.get(a, 0) >= min_level)


def alignment_metrics(graph: ConceptGraph,
                      predicted: Sequence[Iterable[str]],
                      gold: Sequence[Iterable[str]],
                      level: AlignmentLevel = AlignmentLevel.EXACT_LEAF,
                      min_level: int = 3) -> AlignmentScores:
    """Micro-averaged precision/recall/F1 of predicted code sets against gold.

    EXACT_LEAF counts string-identical codes. ANCESTOR_L3 additionally counts
    a code as matched when it shares an ancestor of depth >= min_level with
    any code on the other side (a code counts as its own ancestor); exact
    matches always count, so ancestor-level scores dominate exact-level ones.
    """
    if len(predicted) != len(gold):
        raise MisalignedListsError(f"{len(predicted)} prediction sets vs {len(gold)} gold sets")

    matched_p = total_p = matched_g = total_g = 0
    for pred_codes, gold_codes in zip(predicted, gold):
        pred = sorted(set(pred_codes))
        gset = sorted(set(gold_codes))
        total_p += len(pred)
        total_g += len(gset)
        if level is AlignmentLevel.EXACT_LEAF:
            gold_set = set(gset)
            pred_set = set(pred)
            matched_p += sum(1 for c in pred if c in gold_set)
            matched_g += sum(1 for c in gset if c in pred_set)
        else:
            pred_anc = {c: _deep_ancestors(graph, c, min_level) for c in pred}
            gold_anc = {c: _deep_ancestors(graph, c, min_level) for c in gset}
            for c in pred:
                if c in gold_anc or any(pred_anc[c] & gold_anc[g] for g in gset):
                    matched_p += 1
            for g in gset:
                if g in pred_anc or any(gold_anc[g] & pred_anc[c] for c in pred):
                    matched_g += 1

    precision = matched_p / total_p if total_p else 0.0
    recall = matched_g / total_g if total_g else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return AlignmentScores(precision=precision, recall=recall, f1=f1,
                           matched_predicted=matched_p, total_predicted=total_p,
                           matched_gold=matched_g, total_gold=total_g)


def load_code_sets(path: str | Path) -> dict[str, set[str]]:
    """Artwork code sets from a JSON Lines file ({artwork_id, codes} rows)."""
    import json

    out: dict[str, set[str]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise UnknownCodeError(f"{path}:{lineno}: invalid JSON ({exc})") from None
        out[str(row["artwork_id"])] = {str(c) for c in row.get("codes", ())}
    return out


def save_code_sets(code_sets: Mapping[str, Iterable[str]], path: str | Path) -> None:
    import json

    lines = []
    for artwork_id in sorted(code_sets):
        lines.append(json.dumps(
            {"artwork_id": artwork_id, "codes": sorted(set(code_sets[artwork_id]))},
            sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
