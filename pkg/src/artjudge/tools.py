"""Evidence tools: the five probes the adjudication loop can call.

Each tool inspects one facet of a directed pair and returns a ToolRecord: a
summary score on [0, 1] (higher = more supportive of influence), a structured
payload, and evidence claims ready to append to the case file. Tools are
deterministic given the corpus; anything involving text ranking or pattern
matching is rule-based here, with lexicons shipped as editable JSON files.

Biography masking redacts influence-predicate spans BEFORE retrieval and cue
extraction, so a masked run can never leak explicit influence statements into
its evidence. Replacement is leftmost-longest with a fixed token.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import ClaimKind, Corpus, DirectedPair, EvidenceClaim
from .errors import (
    DataError,
    EmptyPortfolioError,
    MissingBiographyError,
    MissingCodesError,
    MissingSignatureError,
)
from .iconclass import ConceptGraph, directed_set_distance, normalize_codes
from .manifold import WolfflinBasis, manifold_distance, project
from .retrieval import timeline_gate
from .store import EmbeddingMatrix, normalize_matrix

MASK_TOKEN = "[REDACTED]"

TOOL_VISUAL = "VisualAnalyzer"
TOOL_BIOGRAPHY = "BiographyReader"
TOOL_TIMELINE = "TimelineGate"
TOOL_STYLE = "StyleComparator"
TOOL_CONCEPT = "ConceptRetriever"
CANONICAL_TOOL_ORDER = (TOOL_VISUAL, TOOL_BIOGRAPHY, TOOL_TIMELINE, TOOL_STYLE, TOOL_CONCEPT)


class CueCategory(str, Enum):
    CO_LOCATION = "co_location"
    INSTITUTION = "institution"
    EXPLICIT_REFERENCE = "explicit_reference"
    SHARED_TERMINOLOGY = "shared_terminology"
    EXHIBITION = "exhibition"


@dataclass(frozen=True)
class ToolRecord:
    """Structured result of one tool invocation."""

    tool: str
    summary_score: float
    payload: Mapping[str, object]
    claims: tuple[EvidenceClaim, ...]


@dataclass(frozen=True)
class CueHit:
    category: CueCategory
    pattern: str
    doc_id: str
    snippet: str


@dataclass
class MaskLexicon:
    """Phrases to redact; compiled once, longest alternative first so the
    leftmost match consumes the longest phrase starting at that point."""

    patterns: tuple[str, ...]
    _compiled: re.Pattern = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.patterns:
            raise DataError("mask lexicon has no patterns")
        ordered = sorted(set(self.patterns), key=lambda p: (-len(p), p))
        alternation = "|".join(re.escape(p) for p in ordered)
        self._compiled = re.compile(rf"\b(?:{alternation})\b", re.IGNORECASE)


def mask_text(text: str, lexicon: MaskLexicon) -> str:
    """Replace every lexicon phrase with the mask token.

    Idempotent as long as no lexicon phrase occurs inside the token itself;
    text without matches comes back unchanged, same object semantics aside.
    """
    return lexicon._compiled.sub(MASK_TOKEN, text)


@dataclass
class CueLexicons:
    by_category: dict[CueCategory, tuple[str, ...]]

    def mask_lexicon(self) -> MaskLexicon:
        return MaskLexicon(patterns=self.by_category[CueCategory.EXPLICIT_REFERENCE])


_LEXICON_FILES = {
    CueCategory.CO_LOCATION: "co_location.json",
    CueCategory.INSTITUTION: "institution.json",
    CueCategory.EXPLICIT_REFERENCE: "influence_predicates.json",
    CueCategory.SHARED_TERMINOLOGY: "shared_terminology.json",
    CueCategory.EXHIBITION: "exhibition.json",
}


def load_lexicons(directory: str | Path | None = None) -> CueLexicons:
    """Cue lexicons from a directory, defaulting to the files shipped in-package."""
    by_category: dict[CueCategory, tuple[str, ...]] = {}
    for category, filename in _LEXICON_FILES.items():
        if directory is not None:
            raw = (Path(directory) / filename).read_text(encoding="utf-8")
        else:
            raw = resources.files("artjudge.data.lexicons").joinpath(filename).read_text(encoding="utf-8")
        doc = json.loads(raw)
        patterns = tuple(str(p) for p in doc.get("patterns", ()))
        if not patterns:
            raise DataError(f"lexicon {filename} has no patterns")
        by_category[category] = patterns
    return CueLexicons(by_category=by_category)


@dataclass
class ToolContext:
    """Everything tools need, resolved once per corpus."""

    corpus: Corpus
    visual_store: EmbeddingMatrix
    basis: WolfflinBasis
    signatures: dict[str, np.ndarray]
    concept_graph: ConceptGraph
    artwork_codes: dict[str, set[str]]
    lexicons: CueLexicons
    text_store: EmbeddingMatrix | None = None
    mask: MaskLexicon | None = None          # None: unmasked run
    delta_years: int = 20
    temperature: float = 1.0
    min_level: int = 3
    decay: float = 0.8

    def __post_init__(self) -> None:
        if not self.visual_store.normalized:
            self.visual_store = normalize_matrix(self.visual_store)


def _portfolio_rows(ctx: ToolContext, artist_id: str) -> tuple[list[str], np.ndarray]:
    ids = [w.artwork_id for w in ctx.corpus.artworks_of(artist_id)
           if w.key() in ctx.visual_store]
    if not ids:
        raise EmptyPortfolioError(f"artist {artist_id} has no embedded artworks")
    keys = [ctx.corpus.artworks[a].key() for a in ids]
    return ids, ctx.visual_store.take(keys).astype(np.float64)


def visual_analyzer(ctx: ToolContext, pair: DirectedPair, top_k: int = 5) -> ToolRecord:
    """Cross-portfolio visual comparison.

    Finds the top cosine matches between the two portfolios and estimates
    motif overlap as the Jaccard similarity of the concept codes attached to
    the matched artworks. Summary maps the best cosine from [-1, 1] to [0, 1].
    """
    src_ids, src = _portfolio_rows(ctx, pair.source)
    tgt_ids, tgt = _portfolio_rows(ctx, pair.target)
    sims = src @ tgt.T
    flat = np.argsort(sims, axis=None)[::-1][:top_k]
    matches = []
    for pos in flat.tolist():
        i, j = divmod(pos, sims.shape[1])
        matches.append({"source_artwork": src_ids[i], "target_artwork": tgt_ids[j],
                        "cosine": float(sims[i, j])})
    max_cos = matches[0]["cosine"]

    src_codes: set[str] = set()
    tgt_codes: set[str] = set()
    for m in matches:
        src_codes |= ctx.artwork_codes.get(m["source_artwork"], set())
        tgt_codes |= ctx.artwork_codes.get(m["target_artwork"], set())
    union = src_codes | tgt_codes
    overlap = len(src_codes & tgt_codes) / len(union) if union else 0.0

    summary = (max_cos + 1.0) / 2.0
    payload = {"matches": matches, "motif_overlap": overlap, "max_cosine": max_cos}
    claim = EvidenceClaim(kind=ClaimKind.VISUAL_SIMILARITY, score=summary,
                          payload=payload, source_tool=TOOL_VISUAL)
    return ToolRecord(tool=TOOL_VISUAL, summary_score=summary, payload=payload,
                      claims=(claim,))


_WORD = re.compile(r"[a-z0-9']+")


def _lexical_rank(query: str, docs: list[tuple[str, str]], top_n: int) -> list[tuple[str, str]]:
    """Token-overlap ranking fallback when no text embeddings exist."""
    q_tokens = set(_WORD.findall(query.lower()))
    scored = []
    for doc_id, text in docs:
        tokens = set(_WORD.findall(text.lower()))
        scored.append((len(q_tokens & tokens), doc_id, text))
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [(doc_id, text) for _, doc_id, text in scored[:top_n]]


def _embedding_rank(ctx: ToolContext, query_key: str, docs: list[tuple[str, str]],
                    top_n: int) -> list[tuple[str, str]] | None:
    store = ctx.text_store
    if store is None or query_key not in store:
        return None
    q = store.vector(query_key).astype(np.float64)
    qn = np.linalg.norm(q)
    if qn < 1e-12:
        return None
    present = [(doc_id, text) for doc_id, text in docs if doc_id in store]
    if not present:
        return None
    mat = store.take([d for d, _ in present]).astype(np.float64)
    norms = np.linalg.norm(mat, axis=1)
    norms[norms < 1e-12] = 1.0
    sims = (mat @ (q / qn)) / norms
    order = sorted(range(len(present)), key=lambda i: (-float(sims[i]), present[i][0]))
    return [present[i] for i in order[:top_n]]


_SENTENCES = re.compile(r"(?<=[.!?])\s+")


def _name_pattern(name: str) -> re.Pattern | None:
    tokens = [t for t in re.findall(r"\w+", name) if len(t) >= 3]
    if not tokens:
        return None
    return re.compile(r"\b(?:" + "|".join(re.escape(t) for t in tokens) + r")\b",
                      re.IGNORECASE)


def _extract_cues(ctx: ToolContext, passages: list[tuple[str, str]],
                  counterpart: str) -> list[CueHit]:
    """Category cues co-occurring with the counterpart in one sentence.

    A biography routinely names third parties; requiring the counterpart in
    the same sentence keeps those statements from counting as evidence for
    this pair. At most one hit per category per document.
    """
    name_rx = _name_pattern(counterpart)
    hits: list[CueHit] = []
    for category, patterns in ctx.lexicons.by_category.items():
        ordered = sorted(set(patterns), key=lambda p: (-len(p), p))
        rx = re.compile(r"\b(?:" + "|".join(re.escape(p) for p in ordered) + r")\b",
                        re.IGNORECASE)
        for doc_id, text in passages:
            for sentence in _SENTENCES.split(text):
                if name_rx is not None and not name_rx.search(sentence):
                    continue
                m = rx.search(sentence)
                if m is None:
                    continue
                lo = max(0, m.start() - 40)
                hi = min(len(sentence), m.end() + 40)
                hits.append(CueHit(category=category, pattern=m.group(0).lower(),
                                   doc_id=doc_id, snippet=sentence[lo:hi].strip()))
                break
    hits.sort(key=lambda h: (h.category.value, h.doc_id, h.pattern))
    return hits


def biography_reader(ctx: ToolContext, pair: DirectedPair, top_n: int = 4) -> ToolRecord:
    """Documented-pathway probe over both artists' biography texts.

    Retrieves each artist's most relevant passages for a query about the
    counterpart (precomputed query embeddings when the text store has them,
    lexical overlap otherwise), then matches cue lexicons per category,
    counting only sentences that name the counterpart. The pathway score
    composes independent category hits: 1 - prod(1 - 0.5 * hit), i.e. 0 with
    no cues, 0.5 with one category, approaching 1 as more independent
    categories fire. Masking, when active, is applied to the text before
    both ranking and extraction.
    """
    corpus = ctx.corpus
    passages: list[tuple[str, str]] = []
    hits: list[CueHit] = []
    for artist_id, other_id in ((pair.target, pair.source), (pair.source, pair.target)):
        artist = corpus.artists[artist_id]
        other = corpus.artists[other_id]
        docs = []
        for doc_id in artist.bio_doc_ids:
            text = corpus.documents.get(doc_id)
            if text is None:
                continue
            if ctx.mask is not None:
                text = mask_text(text, ctx.mask)
            docs.append((doc_id, text))
        if not docs:
            continue
        query = f"{other.name} contact influence exposure shared context"
        ranked = _embedding_rank(ctx, f"query:{other_id}", docs, top_n)
        if ranked is None:
            ranked = _lexical_rank(query, docs, top_n)
        passages.extend(ranked)
        hits.extend(_extract_cues(ctx, ranked, other.name or other_id))
    if not passages:
        raise MissingBiographyError(f"pair {pair.key}: no biography documents on either side")

    categories = {h.category for h in hits}
    score = 1.0
    for category in CueCategory:
        if category in categories:
            score *= 0.5
    pathway = 1.0 - score

    payload = {
        "passages": [doc_id for doc_id, _ in passages],
        "cues": [{"category": h.category.value, "pattern": h.pattern,
                  "doc_id": h.doc_id, "snippet": h.snippet} for h in hits],
        "categories_hit": sorted(c.value for c in categories),
        "masked": ctx.mask is not None,
    }
    claim = EvidenceClaim(kind=ClaimKind.PATHWAY, score=pathway, payload=payload,
                          source_tool=TOOL_BIOGRAPHY)
    return ToolRecord(tool=TOOL_BIOGRAPHY, summary_score=pathway, payload=payload,
                      claims=(claim,))


def timeline_tool(ctx: ToolContext, pair: DirectedPair) -> ToolRecord:
    """Chronology gate as a callable tool; summary is 1.0 pass / 0.0 fail."""
    gate = timeline_gate(ctx.corpus.artists[pair.source], ctx.corpus.artists[pair.target],
                         ctx.delta_years)
    summary = 1.0 if gate.passed else 0.0
    src, tgt = ctx.corpus.artists[pair.source], ctx.corpus.artists[pair.target]
    payload = {"passed": gate.passed, "reason": gate.reason,
               "source_years": [src.birth_year, src.death_year],
               "target_years": [tgt.birth_year, tgt.death_year]}
    claim = EvidenceClaim(kind=ClaimKind.TIMELINE, score=summary, payload=payload,
                          source_tool=TOOL_TIMELINE)
    return ToolRecord(tool=TOOL_TIMELINE, summary_score=summary, payload=payload,
                      claims=(claim,))


def style_comparator(ctx: ToolContext, pair: DirectedPair) -> ToolRecord:
    """Distance between artist signatures on the style manifold.

    Summary is exp(-distance): identical signatures give 1, distance decays
    toward 0. Per-axis deltas are reported for interpretability.
    """
    for artist_id in (pair.source, pair.target):
        if artist_id not in ctx.signatures:
            raise MissingSignatureError(f"no style signature for artist {artist_id}")
    sig_s = ctx.signatures[pair.source]
    sig_t = ctx.signatures[pair.target]
    dist = manifold_distance(sig_s, sig_t)
    summary = math.exp(-dist)
    deltas = {axis.name: float(sig_t[i] - sig_s[i])
              for i, axis in enumerate(ctx.basis.axes)}
    payload = {"distance": dist, "axis_deltas": deltas,
               "source_signature": [float(x) for x in sig_s],
               "target_signature": [float(x) for x in sig_t]}
    claim = EvidenceClaim(kind=ClaimKind.STYLE, score=summary, payload=payload,
                          source_tool=TOOL_STYLE)
    return ToolRecord(tool=TOOL_STYLE, summary_score=summary, payload=payload,
                      claims=(claim,))


def _artist_codes(ctx: ToolContext, artist_id: str) -> set[str]:
    codes: set[str] = set()
    for artwork in ctx.corpus.artworks_of(artist_id):
        codes |= ctx.artwork_codes.get(artwork.artwork_id, set())
    return codes


def concept_retriever(ctx: ToolContext, pair: DirectedPair) -> ToolRecord:
    """Iconographic proximity between the two portfolios' code sets.

    Normalizes each side (adding deep ancestors), reports both directed set
    distances and the shared deep ancestors. Summary is exp(-d) for the
    source-to-target direction: shared iconography decays with distance.
    """
    raw_src = _artist_codes(ctx, pair.source)
    raw_tgt = _artist_codes(ctx, pair.target)
    if not raw_src:
        raise MissingCodesError(f"artist {pair.source} has no concept codes")
    if not raw_tgt:
        raise MissingCodesError(f"artist {pair.target} has no concept codes")
    src = normalize_codes(ctx.concept_graph, raw_src, ctx.min_level)
    tgt = normalize_codes(ctx.concept_graph, raw_tgt, ctx.min_level)
    d_fwd = directed_set_distance(ctx.concept_graph, src, tgt, ctx.decay)
    d_rev = directed_set_distance(ctx.concept_graph, tgt, src, ctx.decay)
    summary = math.exp(-d_fwd)
    shared = sorted(c for c in (src & tgt)
                    if ctx.concept_graph.depth.get(c, 0) >= ctx.min_level)
    payload = {"distance_forward": d_fwd, "distance_reverse": d_rev,
               "shared_deep_codes": shared,
               "source_codes": sorted(src), "target_codes": sorted(tgt)}
    claim = EvidenceClaim(kind=ClaimKind.CONCEPT, score=summary, payload=payload,
                          source_tool=TOOL_CONCEPT)
    return ToolRecord(tool=TOOL_CONCEPT, summary_score=summary, payload=payload,
                      claims=(claim,))


_TOOL_FNS = {
    TOOL_VISUAL: visual_analyzer,
    TOOL_BIOGRAPHY: biography_reader,
    TOOL_TIMELINE: timeline_tool,
    TOOL_STYLE: style_comparator,
    TOOL_CONCEPT: concept_retriever,
}


@dataclass
class ToolRegistry:
    """Name -> tool dispatch over one ToolContext."""

    ctx: ToolContext
    enabled: tuple[str, ...] = CANONICAL_TOOL_ORDER

    def __post_init__(self) -> None:
        unknown = [t for t in self.enabled if t not in _TOOL_FNS]
        if unknown:
            raise DataError(f"unknown tools: {unknown}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t for t in CANONICAL_TOOL_ORDER if t in self.enabled)

    def without(self, tool: str) -> "ToolRegistry":
        if tool not in _TOOL_FNS:
            raise DataError(f"unknown tool {tool!r}")
        return ToolRegistry(ctx=self.ctx, enabled=tuple(t for t in self.enabled if t != tool))

    def invoke(self, tool: str, pair: DirectedPair, **kwargs) -> ToolRecord:
        if tool not in self.names:
            raise DataError(f"tool {tool!r} is not available in this run")
        return _TOOL_FNS[tool](self.ctx, pair, **kwargs)
