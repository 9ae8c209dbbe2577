"""Nearest-neighbor search over artwork embeddings and candidate generation.

Two interchangeable index backends: ExactScan (brute-force cosine, the
correctness oracle) and SmallWorldGraph, a hierarchical navigable small-world
graph built from scratch. Both speak cosine similarity over unit-normalized
copies of the bound matrix, so similarity == dot product internally.

Candidate generation promotes artwork-level neighbors to directed artist
pairs: a pair is emitted only when the witnessing artworks are by different
artists, the seed similarity clears the floor, and the timeline gate passes
for that direction.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass

import numpy as np

from .config import CandidateConfig, IndexConfig
from .core import ArtistProfile, Corpus, DirectedPair
from .errors import DataError, EmptyMatrixError, EmptyPortfolioError
from .store import EmbeddingMatrix, normalize_matrix


@dataclass(frozen=True)
class GateResult:
    passed: bool
    reason: str


def timeline_gate(source: ArtistProfile, target: ArtistProfile,
                  delta_years: int = 20) -> GateResult:
    """Could `source` have influenced `target` at all, chronologically?

    Requires the source to be born no later than the target, and to have died
    no earlier than `delta_years` before the target's birth (influence can
    flow posthumously through a fading window). Equal birth years pass. A
    living source (death_year None) never fails the second check.
    """
    b_src, b_tgt = source.birth_year, target.birth_year
    if b_src > b_tgt:
        return GateResult(False, f"precedence violated: source born {b_src} after target born {b_tgt}")
    if source.death_year is not None and source.death_year < b_tgt - delta_years:
        return GateResult(
            False,
            f"death before exposure window: source died {source.death_year}, "
            f"window opens {b_tgt - delta_years}")
    return GateResult(True, "ok")


# ---------------------------------------------------------------------------
# index backends
# ---------------------------------------------------------------------------

class ExactScan:
    """Brute-force cosine scan; exact by construction."""

    backend_name = "exact"

    def __init__(self, matrix: EmbeddingMatrix):
        if matrix.count == 0:
            raise EmptyMatrixError("cannot index an empty matrix")
        normed = matrix if matrix.normalized else normalize_matrix(matrix)
        self.ids = normed.ids
        self._vecs = normed.data.astype(np.float32)

    def __len__(self) -> int:
        return len(self.ids)

    def query(self, vec: np.ndarray, k: int) -> list[tuple[str, float]]:
        q = np.asarray(vec, dtype=np.float64).ravel()
        norm = float(np.linalg.norm(q))
        if norm < 1e-12:
            raise DataError("cannot query with a zero vector")
        q = (q / norm).astype(np.float32)
        sims = self._vecs @ q
        k = min(k, sims.shape[0])
        if k <= 0:
            return []
        part = np.argpartition(-sims, k - 1)[:k]
        order = sorted(part.tolist(), key=lambda i: (-float(sims[i]), i))
        return [(self.ids[i], float(sims[i])) for i in order]


class SmallWorldGraph:
    """Hierarchical navigable small-world index (greedy beam search).

    Nodes are inserted one at a time. Each draws a geometric level; layers
    above it are traversed greedily, and on its own layers a beam of width
    `ef_construction` is searched, from which up to `m` diverse neighbors are
    selected and linked bidirectionally (degree capped at m, 2m on the ground
    layer). Queries descend the same way with beam width `ef_search`.
    Distances are 1 - cosine on unit vectors. The level RNG is seeded, so
    building the same matrix with the same parameters gives the same graph.
    """

    backend_name = "smallworld"

    def __init__(self, matrix: EmbeddingMatrix, m: int = 32,
                 ef_construction: int = 200, ef_search: int = 64, seed: int = 0):
        if matrix.count == 0:
            raise EmptyMatrixError("cannot index an empty matrix")
        if m < 2:
            raise DataError(f"graph degree m must be >= 2, got {m}")
        normed = matrix if matrix.normalized else normalize_matrix(matrix)
        self.ids = normed.ids
        self._vecs = np.ascontiguousarray(normed.data, dtype=np.float32)
        self.m = m
        self.ef_construction = max(ef_construction, m)
        self.ef_search = ef_search
        self._level_mult = 1.0 / math.log(m)
        self._rng = random.Random(seed)
        # adjacency: one dict per layer, node -> list of neighbor rows
        self._layers: list[dict[int, list[int]]] = []
        self._entry = 0
        self._max_level = -1
        for row in range(self._vecs.shape[0]):
            self._insert(row)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def level_count(self) -> int:
        return self._max_level + 1

    # -- internals ----------------------------------------------------------

    def _random_level(self) -> int:
        return int(-math.log(1.0 - self._rng.random()) * self._level_mult)

    def _greedy(self, q: np.ndarray, start: int, layer: int) -> int:
        """Descend to the local minimum on one layer (beam width 1)."""
        vecs = self._vecs
        adj = self._layers[layer]
        best = start
        best_d = 1.0 - float(np.dot(vecs[best], q))
        while True:
            improved = False
            nbrs = adj.get(best)
            if nbrs:
                arr = np.array(nbrs, dtype=np.int64)
                dists = 1.0 - vecs[arr] @ q
                i = int(np.argmin(dists))
                if float(dists[i]) < best_d:
                    best = int(arr[i])
                    best_d = float(dists[i])
                    improved = True
            if not improved:
                return best

    def _search_layer(self, q: np.ndarray, entries: list[int], ef: int,
                      layer: int) -> list[tuple[float, int]]:
        """Beam search; returns up to ef (distance, node) pairs, unsorted."""
        vecs = self._vecs
        adj = self._layers[layer]
        visited = np.zeros(vecs.shape[0], dtype=np.uint8)
        push, pop = heapq.heappush, heapq.heappop

        seeds = sorted(set(entries))
        visited[seeds] = 1
        seed_d = 1.0 - vecs[np.array(seeds, dtype=np.int64)] @ q
        candidates = [(float(d), n) for d, n in zip(seed_d, seeds)]
        heapq.heapify(candidates)
        results = [(-d, n) for d, n in candidates]   # max-heap on distance
        heapq.heapify(results)
        while len(results) > ef:
            pop(results)
        worst = -results[0][0] if len(results) >= ef else math.inf

        while candidates:
            dist, node = pop(candidates)
            if dist > worst and len(results) >= ef:
                break
            nbrs = adj.get(node)
            if not nbrs:
                continue
            arr = np.array(nbrs, dtype=np.int64)
            arr = arr[visited[arr] == 0]
            if arr.size == 0:
                continue
            visited[arr] = 1
            dists = 1.0 - vecs[arr] @ q
            if len(results) >= ef:
                keep = dists < worst        # beam is full: drop losers in bulk
                arr, dists = arr[keep], dists[keep]
            for nd, dd in zip(arr.tolist(), dists.tolist()):
                push(candidates, (dd, nd))
                push(results, (-dd, nd))
                if len(results) > ef:
                    pop(results)
            if len(results) >= ef:
                worst = -results[0][0]
        return [(-d, n) for d, n in results]

    def _select_neighbors(self, q: np.ndarray, candidates: list[tuple[float, int]],
                          m: int) -> list[int]:
        """Diversity heuristic: keep a candidate only if it is closer to the
        query than to every already-selected neighbor; backfill with the
        nearest rejected ones if fewer than m survive."""
        ordered = sorted(candidates)
        rows = np.array([node for _, node in ordered], dtype=np.int64)
        # one gemm for all pairwise distances instead of a stack per candidate;
        # min-distance-to-selected advances with one vectorized minimum per pick
        cand_vecs = self._vecs[rows]
        pair_d = 1.0 - cand_vecs @ cand_vecs.T
        min_to_sel = np.full(len(ordered), np.inf)
        shield = min_to_sel.tolist()
        selected: list[int] = []
        rejected: list[int] = []
        for i, (dist, node) in enumerate(ordered):
            if len(selected) >= m:
                break
            if shield[i] < dist:
                rejected.append(node)
                continue
            selected.append(node)
            np.minimum(min_to_sel, pair_d[i], out=min_to_sel)
            shield = min_to_sel.tolist()
        for node in rejected:
            if len(selected) >= m:
                break
            selected.append(node)
        return selected

    def _link(self, layer: int, node: int, neighbor: int, cap: int) -> None:
        adj = self._layers[layer]
        lst = adj.setdefault(node, [])
        if neighbor in lst:
            return
        lst.append(neighbor)
        if len(lst) > cap:
            dists = 1.0 - self._vecs[np.array(lst, dtype=np.int64)] @ self._vecs[node]
            pruned = self._select_neighbors(self._vecs[node],
                                            list(zip(dists.tolist(), lst)), cap)
            adj[node] = pruned

    def _insert(self, row: int) -> None:
        level = self._random_level()
        while len(self._layers) <= level:
            self._layers.append({})
        q = self._vecs[row]
        if self._max_level < 0:
            for lc in range(level + 1):
                self._layers[lc][row] = []
            self._entry = row
            self._max_level = level
            return

        ep = self._entry
        for lc in range(self._max_level, level, -1):
            ep = self._greedy(q, ep, lc)

        entries = [ep]
        for lc in range(min(level, self._max_level), -1, -1):
            found = self._search_layer(q, entries, self.ef_construction, lc)
            cap = self.m * 2 if lc == 0 else self.m
            chosen = self._select_neighbors(q, found, self.m)
            self._layers[lc].setdefault(row, [])
            for nb in chosen:
                self._link(lc, row, nb, cap)
                self._link(lc, nb, row, cap)
            entries = [n for _, n in found]

        if level > self._max_level:
            self._max_level = level
            self._entry = row

    # -- public -------------------------------------------------------------

    def query(self, vec: np.ndarray, k: int) -> list[tuple[str, float]]:
        q = np.asarray(vec, dtype=np.float64).ravel()
        norm = float(np.linalg.norm(q))
        if norm < 1e-12:
            raise DataError("cannot query with a zero vector")
        q = (q / norm).astype(np.float32)
        if k <= 0:
            return []
        ep = self._entry
        for lc in range(self._max_level, 0, -1):
            ep = self._greedy(q, ep, lc)
        found = self._search_layer(q, [ep], max(self.ef_search, k), 0)
        found.sort(key=lambda t: (t[0], t[1]))
        return [(self.ids[n], 1.0 - d) for d, n in found[:k]]


VectorIndex = ExactScan | SmallWorldGraph


def build_index(matrix: EmbeddingMatrix, config: IndexConfig | None = None) -> VectorIndex:
    cfg = config or IndexConfig()
    if cfg.backend == "exact":
        return ExactScan(matrix)
    if cfg.backend == "smallworld":
        return SmallWorldGraph(matrix, m=cfg.m, ef_construction=cfg.ef_construction,
                               ef_search=cfg.ef_search, seed=cfg.seed)
    raise DataError(f"unknown index backend {cfg.backend!r}")


# ---------------------------------------------------------------------------
# candidate generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CandidatePair:
    source: str
    target: str
    seed_similarity: float
    witness: tuple[str, str]     # (source artwork id, target artwork id)

    @property
    def key(self) -> str:
        return f"{self.source}->{self.target}"


def _embedded_portfolio(corpus: Corpus, store: EmbeddingMatrix,
                        artist_id: str) -> list[str]:
    return [w.artwork_id for w in corpus.artworks_of(artist_id) if w.key() in store]


def seed_similarity_exact(corpus: Corpus, store: EmbeddingMatrix,
                          pair: DirectedPair) -> tuple[float, tuple[str, str]]:
    """Max cross-portfolio cosine and its witnessing artwork pair.

    Full cross-product; the verification path for index-derived seeds.
    """
    normed = store if store.normalized else normalize_matrix(store)
    src_ids = _embedded_portfolio(corpus, normed, pair.source)
    tgt_ids = _embedded_portfolio(corpus, normed, pair.target)
    if not src_ids or not tgt_ids:
        raise EmptyPortfolioError(
            f"pair {pair.key}: no embedded artworks for "
            f"{pair.source if not src_ids else pair.target}")
    src = normed.take([corpus.artworks[a].key() for a in src_ids]).astype(np.float64)
    tgt = normed.take([corpus.artworks[a].key() for a in tgt_ids]).astype(np.float64)
    sims = src @ tgt.T
    flat = int(np.argmax(sims))
    i, j = divmod(flat, sims.shape[1])
    return float(sims[i, j]), (src_ids[i], tgt_ids[j])


def generate_candidates(corpus: Corpus, store: EmbeddingMatrix,
                        index: VectorIndex | None = None,
                        config: CandidateConfig | None = None,
                        exact: bool = False) -> list[CandidatePair]:
    """Directed artist pairs worth adjudicating.

    Index mode queries each artwork's top-k cross-artist neighbors; exact
    mode scans every portfolio cross-product. Either way a witness pair must
    clear the similarity floor (inclusive) and the direction must pass the
    timeline gate. Per directed pair the best witness wins.
    """
    cfg = config or CandidateConfig()
    artist_of = {w.artwork_id: w.artist_id for w in corpus.artworks.values()}
    key_to_artwork = {w.key(): w.artwork_id for w in corpus.artworks.values()}
    best: dict[tuple[str, str], tuple[float, tuple[str, str]]] = {}

    def consider(src_artist: str, tgt_artist: str, sim: float,
                 witness: tuple[str, str]) -> None:
        if sim < cfg.min_similarity:
            return
        gate = timeline_gate(corpus.artists[src_artist], corpus.artists[tgt_artist],
                             cfg.delta_years)
        if not gate.passed:
            return
        prev = best.get((src_artist, tgt_artist))
        if prev is None or sim > prev[0]:
            best[(src_artist, tgt_artist)] = (sim, witness)

    if exact or index is None:
        artist_ids = sorted(corpus.artists)
        for i, a in enumerate(artist_ids):
            for b in artist_ids[i + 1:]:
                pair = DirectedPair(source=a, target=b)
                try:
                    sim, witness = seed_similarity_exact(corpus, store, pair)
                except EmptyPortfolioError:
                    continue
                consider(a, b, sim, witness)
                consider(b, a, sim, (witness[1], witness[0]))
        return sorted(best_to_pairs(best), key=lambda c: (c.source, c.target))

    portfolio_sizes = {a: len(_embedded_portfolio(corpus, store, a)) for a in corpus.artists}
    for artwork_id in sorted(corpus.artworks):
        record = corpus.artworks[artwork_id]
        if record.key() not in store:
            continue
        own = record.artist_id
        fetch = cfg.top_k + portfolio_sizes.get(own, 0) + 1
        hits = index.query(store.vector(record.key()), fetch)
        kept = 0
        for key, sim in hits:
            other_artwork = key_to_artwork.get(key)
            if other_artwork is None or other_artwork == artwork_id:
                continue
            other = artist_of[other_artwork]
            if other == own:
                continue
            kept += 1
            if kept > cfg.top_k:
                break
            consider(own, other, sim, (artwork_id, other_artwork))
            consider(other, own, sim, (other_artwork, artwork_id))
    return sorted(best_to_pairs(best), key=lambda c: (c.source, c.target))


def best_to_pairs(best: dict[tuple[str, str], tuple[float, tuple[str, str]]]) -> list[CandidatePair]:
    return [CandidatePair(source=s, target=t, seed_similarity=sim, witness=w)
            for (s, t), (sim, w) in best.items()]


def save_candidates(candidates: list[CandidatePair], path) -> None:
    import json
    from pathlib import Path

    lines = [json.dumps({"source": c.source, "target": c.target,
                         "seed_similarity": c.seed_similarity,
                         "witness": list(c.witness)}, sort_keys=True)
             for c in candidates]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_candidates(path) -> list[CandidatePair]:
    import json
    from pathlib import Path

    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        out.append(CandidatePair(source=row["source"], target=row["target"],
                                 seed_similarity=float(row["seed_similarity"]),
                                 witness=tuple(row["witness"])))
    return out
