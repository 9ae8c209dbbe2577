"""Data model, verdict derivation, and corpus validation."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from artjudge.core import (
    ArtistProfile,
    ArtworkRecord,
    Corpus,
    DirectedPair,
    EvidenceClaim,
    ClaimKind,
    Label,
    Tier,
    Verdict,
    derive_verdict,
    load_corpus,
    pairs_from_rows,
    save_corpus,
    validate_corpus,
)
from artjudge.errors import DataError, ValidationError


# verdict derivation: frozen input/output triples
@pytest.mark.parametrize("score,threshold,verdict,confidence", [
    (0.88, 0.5, Verdict.YES, 0.88),
    (0.35, 0.5, Verdict.NO, 0.65),
    (0.05, 0.5, Verdict.NO, 0.95),
    (0.50, 0.5, Verdict.NO, 0.50),      # tie goes to NO
    (0.500001, 0.5, Verdict.YES, 0.500001),
    (1.0, 0.5, Verdict.YES, 1.0),
    (0.0, 0.5, Verdict.NO, 1.0),
    (0.6, 0.75, Verdict.NO, 0.4),
])
def test_derive_verdict_oracle(score, threshold, verdict, confidence):
    got_verdict, got_confidence = derive_verdict(score, threshold)
    assert got_verdict is verdict
    assert got_confidence == pytest.approx(confidence, abs=1e-12)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0, exclude_min=True, exclude_max=True))
def test_derive_verdict_properties(score, threshold):
    verdict, confidence = derive_verdict(score, threshold)
    assert (verdict is Verdict.YES) == (score > threshold)
    assert confidence == (score if verdict is Verdict.YES else 1.0 - score)
    assert 0.0 <= confidence <= 1.0


@pytest.mark.parametrize("score,threshold", [(-0.01, 0.5), (1.01, 0.5), (0.5, -1.0), (0.5, 2.0)])
def test_derive_verdict_rejects_out_of_range(score, threshold):
    with pytest.raises(DataError):
        derive_verdict(score, threshold)


def test_directed_pair_key():
    pair = DirectedPair(source="a", target="b")
    assert pair.key == "a->b"


def test_pairs_from_rows_parses_labels_and_tiers():
    rows = [
        {"source": "x", "target": "y", "label": "positive"},
        {"source": "y", "target": "z", "label": "negative", "tier": "hard"},
        {"source": "z", "target": "x"},
    ]
    pairs = pairs_from_rows(rows)
    assert pairs[0].label is Label.POSITIVE and pairs[0].tier is None
    assert pairs[1].tier is Tier.HARD
    assert pairs[2].label is None


def test_pairs_from_rows_rejects_bad_label():
    with pytest.raises(DataError):
        pairs_from_rows([{"source": "x", "target": "y", "label": "perhaps"}])


def _tiny_corpus() -> Corpus:
    artists = {
        "a": ArtistProfile(artist_id="a", name="A", birth_year=1800,
                           death_year=1860, bio_doc_ids=("bio:a",),
                           artwork_ids=("a_w0",)),
        "b": ArtistProfile(artist_id="b", name="B", birth_year=1820,
                           death_year=1890, bio_doc_ids=(),
                           artwork_ids=("b_w0",)),
    }
    artworks = {
        "a_w0": ArtworkRecord(artwork_id="a_w0", artist_id="a", year=1830,
                              title="One", medium="oil", embedding_key="a_w0"),
        "b_w0": ArtworkRecord(artwork_id="b_w0", artist_id="b", year=1850,
                              title="Two", medium="oil", embedding_key="b_w0"),
    }
    pairs = [DirectedPair("a", "b", Label.POSITIVE, None)]
    return Corpus(artists=artists, artworks=artworks, pairs=pairs,
                  documents={"bio:a": "A painted."})


def test_validate_clean_corpus_has_no_errors():
    report = validate_corpus(_tiny_corpus())
    assert report.errors == []


def test_validate_flags_dangling_artwork():
    corpus = _tiny_corpus()
    corpus.artists["a"] = ArtistProfile(artist_id="a", name="A", birth_year=1800,
                                        death_year=1860, bio_doc_ids=(),
                                        artwork_ids=("missing",))
    report = validate_corpus(corpus)
    assert any("dangling artwork" in e for e in report.errors)


def test_validate_flags_death_before_birth():
    corpus = _tiny_corpus()
    corpus.artists["a"] = ArtistProfile(artist_id="a", name="A", birth_year=1900,
                                        death_year=1860, bio_doc_ids=(),
                                        artwork_ids=("a_w0",))
    report = validate_corpus(corpus)
    assert any("precedes birth_year" in e for e in report.errors)


def test_validate_flags_self_and_duplicate_pairs():
    corpus = _tiny_corpus()
    corpus.pairs.append(DirectedPair("a", "a"))
    corpus.pairs.append(DirectedPair("a", "b", Label.NEGATIVE, Tier.HARD))
    report = validate_corpus(corpus)
    assert any("self influence" in e for e in report.errors)
    assert any("duplicate directed pair" in e for e in report.errors)


def test_validate_warns_negative_without_tier():
    corpus = _tiny_corpus()
    corpus.pairs.append(DirectedPair("b", "a", Label.NEGATIVE, None))
    report = validate_corpus(corpus)
    assert report.errors == []
    assert any("without tier" in w for w in report.warnings)


def test_corpus_round_trip(tmp_path):
    corpus = _tiny_corpus()
    save_corpus(corpus, tmp_path)
    loaded = load_corpus(tmp_path)
    assert loaded.artists == corpus.artists
    assert loaded.artworks == corpus.artworks
    assert loaded.pairs == corpus.pairs
    assert loaded.documents == corpus.documents


def test_load_corpus_strict_raises(tmp_path):
    corpus = _tiny_corpus()
    corpus.pairs.append(DirectedPair("a", "ghost", Label.POSITIVE, None))
    save_corpus(corpus, tmp_path)
    with pytest.raises(ValidationError) as err:
        load_corpus(tmp_path)
    assert "ghost" in str(err.value)
    lenient = load_corpus(tmp_path, strict=False)
    assert len(lenient.pairs) == 2


def test_load_corpus_missing_file(tmp_path):
    with pytest.raises(ValidationError, match="missing corpus file"):
        load_corpus(tmp_path)


def test_load_corpus_rejects_bad_label(tmp_path):
    corpus = _tiny_corpus()
    save_corpus(corpus, tmp_path)
    text = (tmp_path / "pairs.json").read_text(encoding="utf-8")
    (tmp_path / "pairs.json").write_text(text.replace("positive", "maybe"),
                                         encoding="utf-8")
    with pytest.raises(ValidationError):
        load_corpus(tmp_path)


def test_evidence_claim_serializes():
    claim = EvidenceClaim(kind=ClaimKind.PATHWAY, score=0.75,
                          payload={"cues": ["x"]}, source_tool="BiographyReader")
    doc = claim.to_json()
    assert doc["kind"] == "pathway"
    assert doc["score"] == 0.75
    assert doc["source_tool"] == "BiographyReader"


def test_mini_corpus_is_valid(mini):
    corpus = load_corpus(mini.path)
    report = validate_corpus(corpus)
    assert report.errors == []
    assert len(corpus.pairs) == 60
    assert sum(1 for p in corpus.pairs if p.label is Label.POSITIVE) == 30
    tiers = {}
    for p in corpus.pairs:
        if p.tier:
            tiers[p.tier] = tiers.get(p.tier, 0) + 1
    assert tiers == {Tier.HARD: 10, Tier.MEDIUM: 10, Tier.EASY: 5,
                     Tier.TEMPORAL_IMPOSSIBLE: 5}
