"""Evidence tools: masking, cue gating, and per-tool score oracles."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from artjudge.core import ArtistProfile, ArtworkRecord, Corpus, DirectedPair
from artjudge.errors import (
    DataError,
    EmptyPortfolioError,
    MissingBiographyError,
    MissingCodesError,
    MissingSignatureError,
)
from artjudge.iconclass import parse_graph
from artjudge.manifold import build_basis
from artjudge.store import EmbeddingMatrix
from artjudge.tools import (
    CANONICAL_TOOL_ORDER,
    MASK_TOKEN,
    TOOL_BIOGRAPHY,
    TOOL_CONCEPT,
    TOOL_STYLE,
    TOOL_TIMELINE,
    TOOL_VISUAL,
    CueCategory,
    MaskLexicon,
    ToolContext,
    ToolRegistry,
    biography_reader,
    concept_retriever,
    load_lexicons,
    mask_text,
    style_comparator,
    timeline_tool,
    visual_analyzer,
)

BIO_FELIX = (
    "Felix studied under Greta at the academy in Prague. "
    "He moved to Paris, where Odilon exhibited at the spring salon. "
    "His notebooks mention the bold outlines of Odilon."
)
BIO_ODILON = "Odilon kept a studio in Vienna for forty years."


def _pole_store(directions: np.ndarray) -> EmbeddingMatrix:
    ids, rows = [], []
    for i in range(directions.shape[0]):
        ids += [f"axis{i}+", f"axis{i}-"]
        rows += [directions[i], np.zeros(directions.shape[1])]
    return EmbeddingMatrix(ids=tuple(ids), data=np.array(rows, dtype=np.float32))


def _context(extra_sentence: str = "", masked: bool = False) -> tuple[ToolContext, DirectedPair]:
    dim = 8
    artists = {
        "odilon": ArtistProfile(artist_id="odilon", name="Odilon", birth_year=1800,
                                death_year=1880, bio_doc_ids=("bio_odilon",),
                                artwork_ids=("m1", "m2")),
        "felix": ArtistProfile(artist_id="felix", name="Felix", birth_year=1840,
                               death_year=1910, bio_doc_ids=("bio_felix",),
                               artwork_ids=("p1", "p2")),
        "bare": ArtistProfile(artist_id="bare", name="Bare", birth_year=1850,
                              death_year=1900, artwork_ids=("b1",)),
    }
    artworks = {
        "m1": ArtworkRecord(artwork_id="m1", artist_id="odilon"),
        "m2": ArtworkRecord(artwork_id="m2", artist_id="odilon"),
        "p1": ArtworkRecord(artwork_id="p1", artist_id="felix"),
        "p2": ArtworkRecord(artwork_id="p2", artist_id="felix"),
        "b1": ArtworkRecord(artwork_id="b1", artist_id="bare"),
    }
    bio = BIO_FELIX + (" " + extra_sentence if extra_sentence else "")
    corpus = Corpus(artists=artists, artworks=artworks, pairs=[],
                    documents={"bio_felix": bio, "bio_odilon": BIO_ODILON})

    e = np.eye(dim)
    rows = {
        "m1": e[0],
        "m2": 0.6 * e[0] + 0.8 * e[1],
        "p1": 0.72 * e[0] + math.sqrt(1 - 0.72 ** 2) * e[2],
        "p2": e[3],
    }
    ids = tuple(sorted(rows))
    store = EmbeddingMatrix(ids=ids, data=np.array([rows[i] for i in ids],
                                                   dtype=np.float32))
    basis = build_basis(_pole_store(np.eye(2, dim)))
    signatures = {"odilon": np.array([0.0, 0.0]), "felix": np.array([1.0, 1.0])}
    graph = parse_graph(["7", "73", "73D", "73D1", "73D14", "2", "25", "25F"])
    codes = {"m1": {"73D1"}, "m2": {"73D14"}, "p1": {"73D"}}
    lexicons = load_lexicons()
    ctx = ToolContext(corpus=corpus, visual_store=store, basis=basis,
                      signatures=signatures, concept_graph=graph,
                      artwork_codes=codes, lexicons=lexicons,
                      mask=lexicons.mask_lexicon() if masked else None,
                      min_level=5)
    return ctx, DirectedPair(source="odilon", target="felix")


# -- masking -----------------------------------------------------------------

def test_mask_replaces_and_is_idempotent():
    lex = MaskLexicon(patterns=("influenced by", "studied under",
                                "under the influence"))
    text = "Clearly INFLUENCED BY the master, she studied under him."
    once = mask_text(text, lex)
    assert once == f"Clearly {MASK_TOKEN} the master, she {MASK_TOKEN} him."
    assert mask_text(once, lex) == once


def test_mask_prefers_longest_phrase():
    lex = MaskLexicon(patterns=("influence of", "under the influence"))
    assert mask_text("painted under the influence of wine",
                     lex) == f"painted {MASK_TOKEN} of wine"


def test_mask_requires_word_boundaries_and_patterns():
    lex = MaskLexicon(patterns=("copied",))
    assert mask_text("photocopied page", lex) == "photocopied page"
    assert mask_text("he copied it", lex) == f"he {MASK_TOKEN} it"
    with pytest.raises(DataError, match="no patterns"):
        MaskLexicon(patterns=())


def test_shipped_lexicon_masking_is_idempotent():
    lex = load_lexicons().mask_lexicon()
    for text in (BIO_FELIX, "He was a pupil of the old school, inspired by it.",
                 MASK_TOKEN):
        once = mask_text(text, lex)
        assert mask_text(once, lex) == once


def test_load_lexicons_from_directory(tmp_path):
    for name in ("co_location", "institution", "shared_terminology", "exhibition"):
        (tmp_path / f"{name}.json").write_text(
            json.dumps({"patterns": [f"{name} cue"]}), encoding="utf-8")
    (tmp_path / "influence_predicates.json").write_text(
        json.dumps({"patterns": ["taught by"]}), encoding="utf-8")
    lex = load_lexicons(tmp_path)
    assert lex.by_category[CueCategory.EXPLICIT_REFERENCE] == ("taught by",)
    (tmp_path / "exhibition.json").write_text(json.dumps({"patterns": []}),
                                              encoding="utf-8")
    with pytest.raises(DataError, match="exhibition.json"):
        load_lexicons(tmp_path)


# -- biography reader --------------------------------------------------------

def test_pathway_counts_only_counterpart_sentences():
    ctx, pair = _context()
    record = biography_reader(ctx, pair)
    hit = {c["category"] for c in record.payload["cues"]}
    # the Greta sentence carries explicit_reference and institution cues but
    # never names Odilon, so neither category may fire
    assert hit == {"co_location", "exhibition", "shared_terminology"}
    assert record.summary_score == pytest.approx(1 - 0.5 ** 3)


def test_pathway_composes_categories():
    ctx, pair = _context(extra_sentence="Felix remained indebted to Odilon.")
    record = biography_reader(ctx, pair)
    assert "explicit_reference" in record.payload["categories_hit"]
    assert record.summary_score == pytest.approx(1 - 0.5 ** 4)


def test_masking_removes_explicit_reference_cues():
    extra = "Felix remained indebted to Odilon."
    plain = biography_reader(*_context(extra_sentence=extra))
    masked = biography_reader(*_context(extra_sentence=extra, masked=True))
    assert masked.payload["masked"] is True
    assert "explicit_reference" not in masked.payload["categories_hit"]
    assert masked.summary_score == pytest.approx(1 - 0.5 ** 3)
    assert masked.summary_score < plain.summary_score
    assert not any(c["category"] == "explicit_reference"
                   for c in masked.payload["cues"])


def test_no_cues_means_zero_pathway():
    ctx, _ = _context()
    ctx.corpus.documents["bio_felix"] = "Felix painted quietly all his life."
    record = biography_reader(ctx, DirectedPair(source="odilon", target="felix"))
    assert record.summary_score == 0.0
    assert record.payload["cues"] == []


def test_missing_biographies_raise():
    ctx, _ = _context()
    pair = DirectedPair(source="bare", target="bare")
    with pytest.raises(MissingBiographyError):
        biography_reader(ctx, pair)


def test_embedding_rank_overrides_lexical_rank():
    ctx, pair = _context()
    # doc_decoy is lexically closer to the probe query but embedded far away
    ctx.corpus.documents["doc_plain"] = "They visited Odilon often."
    ctx.corpus.documents["doc_decoy"] = ("Odilon contact influence exposure "
                                         "shared context words.")
    ctx.corpus.artists["felix"] = ArtistProfile(
        artist_id="felix", name="Felix", birth_year=1840, death_year=1910,
        bio_doc_ids=("doc_plain", "doc_decoy"), artwork_ids=("p1", "p2"))
    e = np.eye(4)
    ctx.text_store = EmbeddingMatrix(
        ids=("query:odilon", "doc_plain", "doc_decoy"),
        data=np.array([e[0], e[0], e[1]], dtype=np.float32))
    record = biography_reader(ctx, pair, top_n=1)
    assert "doc_plain" in record.payload["passages"]
    assert "doc_decoy" not in record.payload["passages"]
    ctx.text_store = None
    lexical = biography_reader(ctx, pair, top_n=1)
    assert "doc_decoy" in lexical.payload["passages"]
    assert "doc_plain" not in lexical.payload["passages"]


# -- remaining tools ---------------------------------------------------------

def test_visual_summary_maps_cosine_to_unit_interval():
    ctx, pair = _context()
    record = visual_analyzer(ctx, pair)
    assert record.payload["max_cosine"] == pytest.approx(0.72, abs=1e-5)
    assert record.summary_score == pytest.approx(0.86, abs=1e-5)
    best = record.payload["matches"][0]
    assert (best["source_artwork"], best["target_artwork"]) == ("m1", "p1")
    # matched portfolios share no concept codes
    assert record.payload["motif_overlap"] == 0.0


def test_visual_requires_embedded_portfolios():
    ctx, _ = _context()
    with pytest.raises(EmptyPortfolioError):
        visual_analyzer(ctx, DirectedPair(source="bare", target="felix"))


def test_timeline_tool_scores_gate():
    ctx, pair = _context()
    assert timeline_tool(ctx, pair).summary_score == 1.0
    flipped = timeline_tool(ctx, DirectedPair(source="felix", target="odilon"))
    assert flipped.summary_score == 0.0
    assert "precedence" in flipped.payload["reason"]


def test_style_summary_decays_with_signature_distance():
    ctx, pair = _context()
    record = style_comparator(ctx, pair)
    assert record.payload["distance"] == pytest.approx(math.sqrt(2))
    assert record.summary_score == pytest.approx(math.exp(-math.sqrt(2)), abs=1e-12)
    assert record.summary_score == pytest.approx(0.2431167, abs=1e-7)
    assert record.payload["axis_deltas"] == {"axis0": 1.0, "axis1": 1.0}
    with pytest.raises(MissingSignatureError):
        style_comparator(ctx, DirectedPair(source="odilon", target="bare"))


def test_concept_summary_decays_with_code_distance():
    ctx, pair = _context()
    record = concept_retriever(ctx, pair)
    # source {73D1, 73D14} toward target {73D}: mean(0.512, 1.024)
    assert record.payload["distance_forward"] == pytest.approx(0.768, abs=1e-12)
    assert record.payload["distance_reverse"] == pytest.approx(0.512, abs=1e-12)
    assert record.summary_score == pytest.approx(math.exp(-0.768), abs=1e-12)
    assert record.payload["shared_deep_codes"] == []
    with pytest.raises(MissingCodesError):
        concept_retriever(ctx, DirectedPair(source="odilon", target="bare"))


# -- registry ----------------------------------------------------------------

def test_registry_dispatch_and_disable():
    ctx, pair = _context()
    registry = ToolRegistry(ctx=ctx)
    assert registry.names == CANONICAL_TOOL_ORDER
    assert registry.invoke(TOOL_TIMELINE, pair).tool == TOOL_TIMELINE
    trimmed = registry.without(TOOL_VISUAL)
    assert TOOL_VISUAL not in trimmed.names
    assert registry.names == CANONICAL_TOOL_ORDER  # original untouched
    with pytest.raises(DataError, match="not available"):
        trimmed.invoke(TOOL_VISUAL, pair)
    with pytest.raises(DataError, match="unknown tool"):
        registry.without("Oracle")
    with pytest.raises(DataError, match="unknown tools"):
        ToolRegistry(ctx=ctx, enabled=("Bogus",))


def test_all_tools_emit_claims_with_their_name():
    ctx, pair = _context()
    registry = ToolRegistry(ctx=ctx)
    for name in (TOOL_VISUAL, TOOL_BIOGRAPHY, TOOL_TIMELINE, TOOL_STYLE,
                 TOOL_CONCEPT):
        record = registry.invoke(name, pair)
        assert record.claims, name
        assert all(c.source_tool == name for c in record.claims)
        assert 0.0 <= record.summary_score <= 1.0
