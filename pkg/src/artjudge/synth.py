"""Deterministic synthetic corpora for tests, demos, and the mini benchmark.

Everything here is generated from seeded RNG streams: rebuilding with the
same seed is byte-identical. The mini benchmark is a 60-pair balanced set
(30 positives, 30 negatives tiered 10 hard / 10 medium / 5 easy / 5
temporally impossible) over three mentor clusters, fifteen followers, plus
outsider, ancient, and modern decoys:

* positives are mentor->follower pairs whose follower embeddings blend the
  mentor direction and whose biographies plant pathway cues (strong pairs
  get explicit + institutional + terminology sentences, weak ones a single
  terminology echo);
* hard negatives pair followers with same-cluster mentors who never taught
  them: visually similar, biographically silent;
* medium negatives cross clusters, easy negatives use near-orthogonal
  outsiders, and temporal negatives violate the chronology gate outright.

A few positives are deliberately weak so the benchmark has borderline cases
and the ROC curve has interior points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    ArtistProfile,
    ArtworkRecord,
    Corpus,
    DirectedPair,
    Label,
    Tier,
    save_corpus,
)
from .iconclass import save_code_sets
from .store import EmbeddingMatrix, write_store

DIM = 48
WORKS_PER_ARTIST = 5

_FIRST = [
    "Mara", "Tobias", "Ines", "Viktor", "Salome", "Edwin", "Petra", "Lorenz",
    "Hedda", "Casimir", "Odile", "Ruben", "Clarice", "Janos", "Wilma",
    "Aurel", "Sigrid", "Matteo", "Louisa", "Ferdinand", "Greta", "Anselm",
    "Paulina", "Viggo", "Celeste", "Bruno", "Ottilie", "Stellan", "Rosa", "Emeric",
]
_LAST = [
    "Ellison", "Veld", "Marchetti", "Soral", "Brandt", "Quillon", "Hasek",
    "Trevi", "Lindqvist", "Okafor", "Beaumont", "Castellan", "Drummond",
    "Ferro", "Galvez", "Holt", "Ivanova", "Jelinek", "Kovan", "Lorentz",
    "Meray", "Norell", "Ostrander", "Pellet", "Quastel", "Rendon", "Sorvette",
    "Tamboli", "Ulvaeus", "Vance",
]

_CITIES = ["Paris", "Vienna", "Antwerp", "Milan", "Prague", "Lyon"]

# concept code pools per mentor cluster; prefix structure gives the hierarchy
_CODE_VOCAB = [
    "2", "25", "25F", "25F1", "25F2", "25F3", "25G", "25G1", "25G2",
    "25H", "25H1", "25H2",
    "3", "31", "31A", "31A1", "31A2", "31A3", "31B", "31B1", "31B2",
    "31D", "31D1",
    "4", "48", "48A", "48A1", "48A2", "48C", "48C1", "48C2", "48C7",
    "7", "73", "73D", "73D1", "73D2", "73F", "73F1", "73F2",
]
_CLUSTER_CODES = {
    0: ["25F1", "25F2", "25F3", "25G1", "25G2"],
    1: ["31A1", "31A2", "31A3", "31B1", "31B2"],
    2: ["48A1", "48A2", "48C1", "48C2", "48C7"],
}
_OUTSIDER_CODES = ["73D1", "73D2", "73F1", "73F2"]


@dataclass
class MiniSpec:
    """Which pairs the generator planted, by tier, for assertions in tests."""

    strong_positives: list[tuple[str, str]]
    moderate_positives: list[tuple[str, str]]
    weak_positives: list[tuple[str, str]]
    silent_positives: list[tuple[str, str]]
    hard_negatives: list[tuple[str, str]]
    medium_negatives: list[tuple[str, str]]
    easy_negatives: list[tuple[str, str]]
    temporal_negatives: list[tuple[str, str]]


def _unit(rng: np.random.Generator, dim: int = DIM) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _blend(base: np.ndarray, extra: np.ndarray, w: float) -> np.ndarray:
    v = (1.0 - w) * base + w * extra
    return v / np.linalg.norm(v)


def _artist_id(name: str) -> str:
    return name.lower().replace(" ", "_")


def build_mini_corpus(out_dir: str | Path, seed: int = 7) -> MiniSpec:
    """Write the complete mini benchmark corpus; returns the planted layout."""
    rng = np.random.default_rng(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    names = [f"{f} {l}" for f, l in zip(_FIRST, _LAST)]
    mentors = names[:10]                   # three clusters: 0-3, 4-6, 7-9
    followers = names[10:25]
    outsiders = names[25:27]
    ancients = names[27:29]
    modern = names[29]

    cluster_of_mentor = {m: (0 if i < 4 else 1 if i < 7 else 2)
                         for i, m in enumerate(mentors)}

    # cluster centers nearly orthogonal; mentor directions hug their center
    centers = [_unit(rng) for _ in range(3)]
    direction: dict[str, np.ndarray] = {}
    for m in mentors:
        direction[m] = _blend(centers[cluster_of_mentor[m]], _unit(rng), 0.30)

    # follower mentor assignments: 15 followers x 2 mentors = 30 positives
    mentor_cycle = itertools.cycle(range(10))
    assigned: dict[str, tuple[str, str]] = {}
    for f in followers:
        a = mentors[next(mentor_cycle)]
        b = mentors[next(mentor_cycle)]
        assigned[f] = (a, b)

    # strength tiers for the 30 positive pairs (deterministic layout)
    positive_pairs = [(m, f) for f in followers for m in assigned[f]]
    strong = positive_pairs[0:12]
    moderate = positive_pairs[12:26]
    weak = positive_pairs[26:30]
    strength_of = {}
    strength_of.update({p: "strong" for p in strong})
    strength_of.update({p: "moderate" for p in moderate})
    strength_of.update({p: "weak" for p in weak})
    # one positive with no documentary trail at all: the bio mentions the
    # mentor but trips no cue, so no threshold separates it from negatives
    strength_of[weak[-1]] = "silent"

    for f in followers:
        a, b = assigned[f]
        w_a = 0.34 if strength_of[(a, f)] in ("strong", "moderate") else 0.12
        w_b = 0.34 if strength_of[(b, f)] in ("strong", "moderate") else 0.12
        mix = w_a * direction[a] + w_b * direction[b]
        own = _unit(rng)
        v = mix + (1.0 - min(0.95, w_a + w_b)) * own
        direction[f] = v / np.linalg.norm(v)
    for o in outsiders:
        direction[o] = _unit(rng)
    for artist in (*ancients, modern):
        direction[artist] = _unit(rng)

    # ---- artists, artworks, embeddings -------------------------------------
    def years(kind: str, i: int) -> tuple[int, int]:
        if kind == "mentor":
            return 1790 + 2 * i, 1858 + 2 * i
        if kind == "follower":
            return 1830 + i, 1895 + i
        if kind == "outsider":
            return 1795 + 5 * i, 1862 + 5 * i
        if kind == "ancient":
            return 1490 + 10 * i, 1555 + 10 * i
        return 1901, 1984  # modern

    artists: dict[str, ArtistProfile] = {}
    artworks: dict[str, ArtworkRecord] = {}
    rows: list[np.ndarray] = []
    row_ids: list[str] = []
    codes: dict[str, set[str]] = {}

    def code_pool(name: str) -> list[str]:
        if name in mentors:
            return _CLUSTER_CODES[cluster_of_mentor[name]]
        if name in assigned:
            a, b = assigned[name]
            pool = list(dict.fromkeys(
                _CLUSTER_CODES[cluster_of_mentor[a]] + _CLUSTER_CODES[cluster_of_mentor[b]]))
            return pool
        return _OUTSIDER_CODES

    def add_artist(name: str, kind: str, index: int) -> None:
        aid = _artist_id(name)
        birth, death = years(kind, index)
        work_ids = []
        pool = code_pool(name)
        for w in range(WORKS_PER_ARTIST):
            wid = f"{aid}_w{w}"
            work_ids.append(wid)
            artworks[wid] = ArtworkRecord(
                artwork_id=wid, artist_id=aid, year=birth + 25 + 3 * w,
                title=f"Composition {w + 1}", medium="oil on canvas",
                embedding_key=wid)
            vec = _blend(direction[name], _unit(rng), 0.22)
            rows.append(vec.astype(np.float32))
            row_ids.append(wid)
            picked = rng.choice(len(pool), size=min(3, len(pool)), replace=False)
            codes[wid] = {pool[int(i)] for i in picked}
        artists[aid] = ArtistProfile(
            artist_id=aid, name=name, birth_year=birth, death_year=death,
            bio_doc_ids=(f"bio:{aid}:0", f"bio:{aid}:1"),
            artwork_ids=tuple(work_ids))

    for i, m in enumerate(mentors):
        add_artist(m, "mentor", i)
    for i, f in enumerate(followers):
        add_artist(f, "follower", i)
    for i, o in enumerate(outsiders):
        add_artist(o, "outsider", i)
    for i, a in enumerate(ancients):
        add_artist(a, "ancient", i)
    add_artist(modern, "modern", 0)

    # ---- biographies + text embeddings --------------------------------------
    NEUTRAL = [
        "{name} painted coastal light at dawn for most of one decade.",
        "{name} kept a quiet routine of river sketches and long walks.",
        "{name} preferred small panels and repeated the same hillside motif.",
        "{name} spent late years arranging a catalogue of early drawings.",
    ]
    documents: dict[str, str] = {}
    query_vec = {_artist_id(n): _unit(rng) for n in names}
    text_rows: list[np.ndarray] = []
    text_ids: list[str] = []

    def add_doc(doc_id: str, text: str, anchor: str | None) -> None:
        documents[doc_id] = text
        base = query_vec[anchor] if anchor else _unit(rng)
        vec = _blend(base, _unit(rng), 0.18 if anchor else 1.0)
        text_rows.append(vec.astype(np.float32))
        text_ids.append(doc_id)

    city_cycle = itertools.cycle(_CITIES)
    for name in names:
        aid = _artist_id(name)
        if name in assigned:
            a, b = assigned[name]
            sentences = []
            anchors = []
            for mentor in (a, b):
                strength = strength_of[(mentor, name)]
                city = next(city_cycle)
                if strength == "strong":
                    sentences.append(
                        f"{name} studied under {mentor} at the academy in {city}. "
                        f"{name} collected the woodblock prints that {mentor} sent from abroad.")
                elif strength == "moderate":
                    sentences.append(
                        f"{name} moved to {city}, where {mentor} exhibited at the spring salon.")
                elif strength == "weak":
                    sentences.append(
                        f"{name} returned often to the bold outlines of {mentor}.")
                else:
                    sentences.append(
                        f"{name} kept a postcard of {mentor} pinned above the bench.")
                anchors.append(_artist_id(mentor))
            add_doc(f"bio:{aid}:0", sentences[0], anchors[0])
            add_doc(f"bio:{aid}:1", sentences[1] + " " + NEUTRAL[0].format(name=name),
                    anchors[1])
        else:
            add_doc(f"bio:{aid}:0", NEUTRAL[1].format(name=name), None)
            add_doc(f"bio:{aid}:1", NEUTRAL[2].format(name=name), None)

    for aid, qv in query_vec.items():
        text_rows.append(qv.astype(np.float32))
        text_ids.append(f"query:{aid}")

    # ---- pairs ---------------------------------------------------------------
    def pid(name: str) -> str:
        return _artist_id(name)

    pairs: list[DirectedPair] = []
    spec = MiniSpec([], [], [], [], [], [], [], [])
    for m, f in positive_pairs:
        pairs.append(DirectedPair(pid(m), pid(f), Label.POSITIVE, None))
        bucket = {"strong": spec.strong_positives, "moderate": spec.moderate_positives,
                  "weak": spec.weak_positives,
                  "silent": spec.silent_positives}[strength_of[(m, f)]]
        bucket.append((pid(m), pid(f)))

    # hard negatives: same-cluster mentor who never taught the follower
    hard: list[tuple[str, str]] = []
    for f in followers:
        if len(hard) >= 10:
            break
        a, _ = assigned[f]
        cluster = cluster_of_mentor[a]
        for m in mentors:
            if cluster_of_mentor[m] == cluster and m not in assigned[f]:
                candidate = (pid(m), pid(f))
                if candidate not in hard:
                    hard.append(candidate)
                break
    # medium negatives: mentor from a different cluster
    medium: list[tuple[str, str]] = []
    for f in reversed(followers):
        if len(medium) >= 10:
            break
        taught = {cluster_of_mentor[m] for m in assigned[f]}
        for m in mentors:
            if cluster_of_mentor[m] not in taught:
                candidate = (pid(m), pid(f))
                if candidate not in medium and candidate not in hard:
                    medium.append(candidate)
                    break
    easy = [(pid(o), pid(f)) for o, f in zip(itertools.cycle(outsiders), followers[:5])]
    temporal = [(pid(a), pid(f)) for a, f in zip(itertools.cycle(ancients), followers[5:9])]
    temporal.append((pid(modern), pid(followers[9])))   # precedence violation

    for bucket, tier, dest in ((hard, Tier.HARD, spec.hard_negatives),
                               (medium, Tier.MEDIUM, spec.medium_negatives),
                               (easy, Tier.EASY, spec.easy_negatives),
                               (temporal, Tier.TEMPORAL_IMPOSSIBLE, spec.temporal_negatives)):
        for s, t in bucket:
            pairs.append(DirectedPair(s, t, Label.NEGATIVE, tier))
            dest.append((s, t))

    # ---- pole prompts: random but fixed axes in the same space ---------------
    pole_ids = []
    pole_rows = []
    for k in range(1, 6):
        plus = _unit(rng)
        minus = _unit(rng)
        pole_ids += [f"axis{k}+", f"axis{k}-"]
        pole_rows += [plus.astype(np.float32), minus.astype(np.float32)]
    generic_ids = list(pole_ids)
    shared = _unit(rng)
    generic_rows = []
    for _ in range(5):
        # generic prompts are nearly parallel: weakly separated axes
        generic_rows += [_blend(shared, _unit(rng), 0.15).astype(np.float32),
                         _blend(shared, _unit(rng), 0.15).astype(np.float32)]

    # ---- write everything -----------------------------------------------------
    corpus = Corpus(artists=artists, artworks=artworks, pairs=pairs, documents=documents)
    save_corpus(corpus, out)
    write_store(EmbeddingMatrix(ids=tuple(row_ids), data=np.stack(rows),
                                normalized=True, comment="synthetic mini corpus / visual"),
                out / "visual.ajem")
    text_matrix = EmbeddingMatrix(ids=tuple(text_ids), data=np.stack(text_rows),
                                  normalized=True, comment="synthetic mini corpus / text")
    write_store(text_matrix, out / "text.ajem")
    write_store(text_matrix, out / "text_masked.ajem")
    write_store(EmbeddingMatrix(ids=tuple(pole_ids), data=np.stack(pole_rows),
                                normalized=True, comment="style pole prompts"),
                out / "poles.ajem")
    write_store(EmbeddingMatrix(ids=tuple(generic_ids), data=np.stack(generic_rows),
                                normalized=True, comment="generic pole prompts"),
                out / "poles_generic.ajem")
    save_code_sets(codes, out / "codes.jsonl")
    (out / "iconclass.txt").write_text("\n".join(_CODE_VOCAB) + "\n", encoding="utf-8")
    return spec


def build_impossible_corpus(out_dir: str | Path, n_pairs: int = 50, seed: int = 11) -> None:
    """A corpus whose every pair violates the chronology gate.

    Half the pairs have the source dead long before the target's exposure
    window, half have the source born after the target.
    """
    rng = np.random.default_rng(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    half = n_pairs - n_pairs // 2

    artists: dict[str, ArtistProfile] = {}
    artworks: dict[str, ArtworkRecord] = {}
    rows, row_ids = [], []

    def add(aid: str, name: str, birth: int, death: int) -> None:
        wid = f"{aid}_w0"
        artists[aid] = ArtistProfile(artist_id=aid, name=name, birth_year=birth,
                                     death_year=death, bio_doc_ids=(),
                                     artwork_ids=(wid,))
        artworks[wid] = ArtworkRecord(artwork_id=wid, artist_id=aid,
                                      year=birth + 30, title="Untitled",
                                      medium="oil", embedding_key=wid)
        rows.append(_unit(rng).astype(np.float32))
        row_ids.append(wid)

    pairs: list[DirectedPair] = []
    for i in range(half):
        old, new = f"elder_{i:02d}", f"heir_{i:02d}"
        add(old, f"Elder {i:02d}", 1500 + i, 1560 + i)
        add(new, f"Heir {i:02d}", 1800 + i, 1860 + i)
        pairs.append(DirectedPair(old, new, Label.NEGATIVE, Tier.TEMPORAL_IMPOSSIBLE))
    for i in range(n_pairs - half):
        late, early = f"latecomer_{i:02d}", f"forebear_{i:02d}"
        add(late, f"Latecomer {i:02d}", 1900 + i, 1970 + i)
        add(early, f"Forebear {i:02d}", 1700 + i, 1770 + i)
        pairs.append(DirectedPair(late, early, Label.NEGATIVE, Tier.TEMPORAL_IMPOSSIBLE))

    corpus = Corpus(artists=artists, artworks=artworks, pairs=pairs, documents={})
    save_corpus(corpus, out)
    write_store(EmbeddingMatrix(ids=tuple(row_ids), data=np.stack(rows),
                                normalized=True, comment="impossible fixture / visual"),
                out / "visual.ajem")
    pole_ids, pole_rows = [], []
    for k in range(1, 6):
        pole_ids += [f"axis{k}+", f"axis{k}-"]
        pole_rows += [_unit(rng).astype(np.float32), _unit(rng).astype(np.float32)]
    write_store(EmbeddingMatrix(ids=tuple(pole_ids), data=np.stack(pole_rows),
                                normalized=True, comment="style pole prompts"),
                out / "poles.ajem")
    save_code_sets({wid: {"25F1"} for wid in row_ids}, out / "codes.jsonl")
    (out / "iconclass.txt").write_text("\n".join(["2", "25", "25F", "25F1"]) + "\n",
                                       encoding="utf-8")


def make_leakage_case(n_sentences: int = 100, seed: int = 13
                      ) -> tuple[Corpus, list[DirectedPair]]:
    """In-memory corpus with planted explicit influence sentences.

    Ten artists, each biography stuffed with direct "influenced by" style
    statements about the others; returns the corpus and the pairs whose
    retrieval would surface those statements.
    """
    rng = np.random.default_rng(seed)
    names = [f"{f} {l}" for f, l in zip(_FIRST[:10], _LAST[20:30])]
    ids = [_artist_id(n) for n in names]
    predicates = ["was influenced by", "drew inspiration from", "studied under",
                  "imitated", "admired"]

    artists: dict[str, ArtistProfile] = {}
    artworks: dict[str, ArtworkRecord] = {}
    documents: dict[str, str] = {}
    per_doc = n_sentences // len(names)
    extra = n_sentences - per_doc * len(names)
    planted = 0
    for i, (aid, name) in enumerate(zip(ids, names)):
        count = per_doc + (1 if i < extra else 0)
        sentences = []
        for s in range(count):
            other = names[(i + 1 + s) % len(names)]
            verb = predicates[int(rng.integers(len(predicates)))]
            sentences.append(f"{name} {verb} {other}.")
            planted += 1
        doc_id = f"bio:{aid}:0"
        documents[doc_id] = " ".join(sentences)
        wid = f"{aid}_w0"
        artists[aid] = ArtistProfile(artist_id=aid, name=name, birth_year=1800 + i,
                                     death_year=1870 + i, bio_doc_ids=(doc_id,),
                                     artwork_ids=(wid,))
        artworks[wid] = ArtworkRecord(artwork_id=wid, artist_id=aid,
                                      embedding_key=wid)
    assert planted == n_sentences
    pairs = [DirectedPair(ids[(i + 1) % len(ids)], ids[i]) for i in range(len(ids))]
    corpus = Corpus(artists=artists, artworks=artworks, pairs=[], documents=documents)
    return corpus, pairs
