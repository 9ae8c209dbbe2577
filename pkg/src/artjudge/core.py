"""Core data model: artists, artworks, influence pairs, evidence, verdicts.

A corpus is three JSON collections (artists.json, artworks.json, pairs.json)
plus an optional biographies.json, all stamped with the same schema string.
Validation separates hard errors (schema violations, duplicate ids, dangling
references, non-finite numerics) from warnings (missing optional fields), and
loading refuses a corpus with hard errors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import DataError, ValidationError

SCHEMA_VERSION = "artjudge-corpus/1"


class Verdict(str, Enum):
    YES = "YES"
    NO = "NO"


class Label(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


class Tier(str, Enum):
    """Difficulty tier of a negative pair."""

    HARD = "hard"                              # visually deceptive
    MEDIUM = "medium"                          # same era, unrelated movements
    EASY = "easy"                              # different era and movement
    TEMPORAL_IMPOSSIBLE = "temporal_impossible"  # violates the timeline gate


class ClaimKind(str, Enum):
    METADATA = "metadata"
    VISUAL_SIMILARITY = "visual_similarity"
    TIMELINE = "timeline"
    PATHWAY = "pathway"
    STYLE = "style"
    CONCEPT = "concept"
    CRITIC_CHALLENGE = "critic_challenge"
    TOOL_FAILURE = "tool_failure"


@dataclass(frozen=True)
class ArtistProfile:
    artist_id: str
    name: str
    birth_year: int
    death_year: int | None = None          # None: alive / unknown death
    bio_doc_ids: tuple[str, ...] = ()
    artwork_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class ArtworkRecord:
    artwork_id: str
    artist_id: str
    year: int | None = None
    title: str = ""
    medium: str | None = None
    embedding_key: str = ""                # defaults to artwork_id when empty

    def key(self) -> str:
        return self.embedding_key or self.artwork_id


@dataclass(frozen=True)
class DirectedPair:
    """An influence hypothesis: did `source` influence `target`?"""

    source: str
    target: str
    label: Label | None = None
    tier: Tier | None = None

    @property
    def key(self) -> str:
        return f"{self.source}->{self.target}"


@dataclass(frozen=True)
class EvidenceClaim:
    """One typed, tool-attributable piece of evidence.

    `score` is the claim's own scalar on [0, 1] (a similarity, a pathway
    strength, a gate outcome); `payload` holds the structured detail and must
    stay JSON-serializable. Claims from the seeding step carry source_tool=None.
    """

    kind: ClaimKind
    score: float
    payload: Mapping[str, Any] = field(default_factory=dict)
    source_tool: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "score": self.score,
            "source_tool": self.source_tool,
            "payload": dict(self.payload),
        }


@dataclass(frozen=True)
class VerdictTuple:
    """Final adjudication output for one directed pair."""

    verdict: Verdict
    confidence: float
    influence_score: float
    evidence: tuple[EvidenceClaim, ...] = ()
    trajectory_ref: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "confidence": self.confidence,
            "influence_score": self.influence_score,
            "evidence": [c.to_json() for c in self.evidence],
            "trajectory_ref": self.trajectory_ref,
        }


def derive_verdict(influence_score: float, threshold: float) -> tuple[Verdict, float]:
    """Map a plausibility score to (verdict, confidence).

    YES exactly when the score strictly exceeds the threshold; a score equal
    to the threshold is a NO. Confidence is the probability mass behind the
    chosen side: the score itself for YES, its complement for NO.
    """
    if not (isinstance(influence_score, (int, float)) and math.isfinite(influence_score)):
        raise DataError(f"influence score must be finite, got {influence_score!r}")
    if not 0.0 <= influence_score <= 1.0:
        raise DataError(f"influence score outside [0, 1]: {influence_score}")
    if not (math.isfinite(threshold) and 0.0 <= threshold <= 1.0):
        raise DataError(f"decision threshold outside [0, 1]: {threshold}")
    if influence_score > threshold:
        return Verdict.YES, influence_score
    return Verdict.NO, 1.0 - influence_score


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


@dataclass
class Corpus:
    artists: dict[str, ArtistProfile]
    artworks: dict[str, ArtworkRecord]
    pairs: list[DirectedPair]
    documents: dict[str, str] = field(default_factory=dict)   # biography texts

    def artworks_of(self, artist_id: str) -> list[ArtworkRecord]:
        artist = self.artists.get(artist_id)
        if artist is None:
            raise DataError(f"unknown artist: {artist_id}")
        return [self.artworks[a] for a in artist.artwork_ids if a in self.artworks]


def _expect(doc: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in doc:
        raise ValidationError(f"{where}: missing top-level key {key!r}")
    return doc[key]


def _check_schema(doc: Mapping[str, Any], where: str, report: ValidationReport) -> None:
    schema = doc.get("schema")
    if schema != SCHEMA_VERSION:
        report.errors.append(f"{where}: schema {schema!r} != {SCHEMA_VERSION!r}")


def _opt_int(value: Any) -> int | None:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"expected integer year, got {value!r}")
    return value


def validate_corpus(corpus: Corpus) -> ValidationReport:
    """Cross-reference every id and numeric field; never raises."""
    report = ValidationReport()
    err, warn = report.errors.append, report.warnings.append

    for artist in corpus.artists.values():
        where = f"artist {artist.artist_id}"
        if not artist.artist_id:
            err("artist with empty id")
        if not artist.name:
            warn(f"{where}: empty name")
        if not isinstance(artist.birth_year, int) or not math.isfinite(artist.birth_year):
            err(f"{where}: birth_year must be a finite integer")
        if artist.death_year is not None:
            if not isinstance(artist.death_year, int):
                err(f"{where}: death_year must be an integer or null")
            elif artist.death_year < artist.birth_year:
                err(f"{where}: death_year {artist.death_year} precedes birth_year {artist.birth_year}")
        if not artist.artwork_ids:
            warn(f"{where}: empty portfolio")
        for aw in artist.artwork_ids:
            if aw not in corpus.artworks:
                err(f"{where}: dangling artwork reference {aw!r}")
        if not artist.bio_doc_ids:
            warn(f"{where}: no biography documents")
        for doc_id in artist.bio_doc_ids:
            if corpus.documents and doc_id not in corpus.documents:
                err(f"{where}: dangling biography reference {doc_id!r}")

    for artwork in corpus.artworks.values():
        where = f"artwork {artwork.artwork_id}"
        if artwork.artist_id not in corpus.artists:
            err(f"{where}: dangling artist reference {artwork.artist_id!r}")
        if artwork.year is not None and not isinstance(artwork.year, int):
            err(f"{where}: year must be an integer or null")
        if artwork.year is None:
            warn(f"{where}: missing year")
        if artwork.medium is None:
            warn(f"{where}: missing medium")

    seen: set[tuple[str, str]] = set()
    for pair in corpus.pairs:
        where = f"pair {pair.key}"
        for side, aid in (("source", pair.source), ("target", pair.target)):
            if aid not in corpus.artists:
                err(f"{where}: dangling {side} artist {aid!r}")
        if pair.source == pair.target:
            err(f"{where}: self influence pair")
        if (pair.source, pair.target) in seen:
            err(f"{where}: duplicate directed pair")
        seen.add((pair.source, pair.target))
        if pair.label is Label.NEGATIVE and pair.tier is None:
            warn(f"{where}: negative pair without tier")

    return report


def _load_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ValidationError(f"missing corpus file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path.name}: invalid JSON ({exc})") from None


def load_corpus(corpus_dir: str | Path, strict: bool = True) -> Corpus:
    """Read a corpus directory. With strict=True, hard errors raise."""
    root = Path(corpus_dir)
    report = ValidationReport()

    artists_doc = _load_json(root / "artists.json")
    artworks_doc = _load_json(root / "artworks.json")
    pairs_doc = _load_json(root / "pairs.json")
    _check_schema(artists_doc, "artists.json", report)
    _check_schema(artworks_doc, "artworks.json", report)
    _check_schema(pairs_doc, "pairs.json", report)

    artists: dict[str, ArtistProfile] = {}
    for row in _expect(artists_doc, "artists", "artists.json"):
        profile = ArtistProfile(
            artist_id=str(row["artist_id"]),
            name=str(row.get("name", "")),
            birth_year=_opt_int(row.get("birth_year")) if row.get("birth_year") is not None else 0,
            death_year=_opt_int(row.get("death_year")),
            bio_doc_ids=tuple(row.get("bio_doc_ids", ())),
            artwork_ids=tuple(row.get("artwork_ids", ())),
        )
        if "birth_year" not in row or row["birth_year"] is None:
            report.errors.append(f"artist {profile.artist_id}: missing birth_year")
        if profile.artist_id in artists:
            report.errors.append(f"duplicate artist id {profile.artist_id!r}")
        artists[profile.artist_id] = profile

    artworks: dict[str, ArtworkRecord] = {}
    for row in _expect(artworks_doc, "artworks", "artworks.json"):
        record = ArtworkRecord(
            artwork_id=str(row["artwork_id"]),
            artist_id=str(row["artist_id"]),
            year=_opt_int(row.get("year")),
            title=str(row.get("title", "")),
            medium=row.get("medium"),
            embedding_key=str(row.get("embedding_key", "")),
        )
        if record.artwork_id in artworks:
            report.errors.append(f"duplicate artwork id {record.artwork_id!r}")
        artworks[record.artwork_id] = record

    pairs: list[DirectedPair] = []
    for row in _expect(pairs_doc, "pairs", "pairs.json"):
        try:
            label = Label(row["label"]) if row.get("label") else None
            tier = Tier(row["tier"]) if row.get("tier") else None
        except ValueError as exc:
            raise ValidationError(f"pairs.json: {exc}") from None
        pairs.append(DirectedPair(
            source=str(row["source_artist_id"]),
            target=str(row["target_artist_id"]),
            label=label,
            tier=tier,
        ))

    documents: dict[str, str] = {}
    bio_path = root / "biographies.json"
    if bio_path.exists():
        bio_doc = _load_json(bio_path)
        _check_schema(bio_doc, "biographies.json", report)
        documents = {str(k): str(v) for k, v in _expect(bio_doc, "documents", "biographies.json").items()}

    corpus = Corpus(artists=artists, artworks=artworks, pairs=pairs, documents=documents)
    full = validate_corpus(corpus)
    report.errors.extend(full.errors)
    report.warnings.extend(full.warnings)
    if strict and report.errors:
        head = "; ".join(report.errors[:4])
        raise ValidationError(f"corpus failed validation ({len(report.errors)} errors): {head}", report)
    return corpus


def save_corpus(corpus: Corpus, corpus_dir: str | Path) -> None:
    """Write the four JSON collections (biographies only when present)."""
    root = Path(corpus_dir)
    root.mkdir(parents=True, exist_ok=True)

    def dump(name: str, payload: dict[str, Any]) -> None:
        payload = {"schema": SCHEMA_VERSION, **payload}
        (root / name).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")

    dump("artists.json", {"artists": [
        {
            "artist_id": a.artist_id, "name": a.name,
            "birth_year": a.birth_year, "death_year": a.death_year,
            "bio_doc_ids": list(a.bio_doc_ids), "artwork_ids": list(a.artwork_ids),
        }
        for a in sorted(corpus.artists.values(), key=lambda a: a.artist_id)
    ]})
    dump("artworks.json", {"artworks": [
        {
            "artwork_id": w.artwork_id, "artist_id": w.artist_id, "year": w.year,
            "title": w.title, "medium": w.medium, "embedding_key": w.embedding_key,
        }
        for w in sorted(corpus.artworks.values(), key=lambda w: w.artwork_id)
    ]})
    dump("pairs.json", {"pairs": [
        {
            "source_artist_id": p.source, "target_artist_id": p.target,
            "label": p.label.value if p.label else None,
            "tier": p.tier.value if p.tier else None,
        }
        for p in corpus.pairs
    ]})
    if corpus.documents:
        dump("biographies.json", {"documents": dict(sorted(corpus.documents.items()))})


def pairs_from_rows(rows: Iterable[Mapping[str, Any]]) -> list[DirectedPair]:
    """Parse benchmark pair rows ({source, target, label, tier} per row)."""
    out = []
    for row in rows:
        try:
            label = Label(row["label"]) if row.get("label") else None
            tier = Tier(row["tier"]) if row.get("tier") else None
        except ValueError as exc:
            raise DataError(f"bad pair row: {exc}") from None
        out.append(DirectedPair(
            source=str(row["source"]),
            target=str(row["target"]),
            label=label,
            tier=tier,
        ))
    return out
