"""Materialize adjudication results as a property graph and export it.

The graph holds Artist nodes and INFLUENCED edges carrying the verdict,
confidence, influence score, an evidence digest, and the contributing tools.
NO verdicts are kept: an absent edge means "never adjudicated", which is a
different fact from "adjudicated and rejected". Optionally Artwork nodes and
AUTHORED edges are included so the influence edges can be traced down to the
objects that generated the visual evidence.

Three export formats, all deterministic:

* graph JSON - a lossless dict round-trippable to the in-memory graph;
* a MERGE script for property-graph databases, idempotent by construction
  (re-running it cannot duplicate nodes or edges);
* a nodes.csv / edges.csv pair where all properties live in one JSON column
  (header: id,kind,properties for nodes; source,target,kind,properties for
  edges).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .core import Corpus, DirectedPair, VerdictTuple
from .errors import DanglingVerdictError

NODE_ARTIST = "Artist"
NODE_ARTWORK = "Artwork"
EDGE_INFLUENCED = "INFLUENCED"
EDGE_AUTHORED = "AUTHORED"


@dataclass(frozen=True)
class GraphNode:
    node_id: str
    kind: str
    properties: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class GraphEdge:
    source: str
    target: str
    kind: str
    properties: Mapping[str, object] = field(default_factory=dict)


@dataclass
class PropertyGraph:
    nodes: list[GraphNode]
    edges: list[GraphEdge]

    def node_ids(self) -> set[str]:
        return {n.node_id for n in self.nodes}


def _edge_properties(verdict: VerdictTuple, refs: list[str]) -> dict[str, object]:
    kinds: dict[str, int] = {}
    tools: set[str] = set()
    for claim in verdict.evidence:
        kinds[claim.kind.value] = kinds.get(claim.kind.value, 0) + 1
        if claim.source_tool:
            tools.add(claim.source_tool)
    return {
        "verdict": verdict.verdict.value,
        "confidence": verdict.confidence,
        "influence_score": verdict.influence_score,
        "evidence_count": len(verdict.evidence),
        "claim_kinds": dict(sorted(kinds.items())),
        "tools": sorted(tools),
        "trajectory_refs": list(refs),
    }


def materialize_graph(corpus: Corpus,
                      results: Sequence[tuple[DirectedPair, VerdictTuple]],
                      include_artworks: bool = False) -> PropertyGraph:
    """Build the graph from (pair, verdict) results.

    Only artists that appear in some result become nodes. Re-adjudicating a
    pair overwrites the edge's scores with the later result while the
    trajectory references of both runs are retained, in order. A result
    naming an artist the corpus does not know raises DanglingVerdictError.
    """
    edge_data: dict[tuple[str, str], tuple[VerdictTuple, list[str]]] = {}
    artist_ids: set[str] = set()
    for pair, verdict in results:
        for artist_id in (pair.source, pair.target):
            if artist_id not in corpus.artists:
                raise DanglingVerdictError(
                    f"verdict for {pair.key} names unknown artist {artist_id!r}")
        artist_ids.update((pair.source, pair.target))
        key = (pair.source, pair.target)
        refs = edge_data[key][1] if key in edge_data else []
        ref = verdict.trajectory_ref or pair.key
        if ref not in refs:
            refs = refs + [ref]
        edge_data[key] = (verdict, refs)

    nodes: list[GraphNode] = []
    for aid in sorted(artist_ids):
        artist = corpus.artists[aid]
        nodes.append(GraphNode(node_id=aid, kind=NODE_ARTIST, properties={
            "name": artist.name,
            "birth_year": artist.birth_year,
            "death_year": artist.death_year,
        }))

    edges = [GraphEdge(source=s, target=t, kind=EDGE_INFLUENCED,
                       properties=_edge_properties(verdict, refs))
             for (s, t), (verdict, refs) in sorted(edge_data.items())]

    if include_artworks:
        for aid in sorted(artist_ids):
            for wid in corpus.artists[aid].artwork_ids:
                work = corpus.artworks[wid]
                nodes.append(GraphNode(node_id=wid, kind=NODE_ARTWORK, properties={
                    "title": work.title,
                    "year": work.year,
                    "medium": work.medium,
                }))
                edges.append(GraphEdge(source=aid, target=wid, kind=EDGE_AUTHORED,
                                       properties={}))
    return PropertyGraph(nodes=nodes, edges=edges)


# ---------------------------------------------------------------------------
# graph JSON (lossless)
# ---------------------------------------------------------------------------

def to_graph_json(graph: PropertyGraph) -> dict:
    return {
        "nodes": [{"id": n.node_id, "kind": n.kind,
                   "properties": dict(n.properties)} for n in graph.nodes],
        "edges": [{"source": e.source, "target": e.target, "kind": e.kind,
                   "properties": dict(e.properties)} for e in graph.edges],
    }


def graph_from_json(doc: Mapping) -> PropertyGraph:
    nodes = [GraphNode(node_id=n["id"], kind=n["kind"],
                       properties=dict(n.get("properties", {})))
             for n in doc["nodes"]]
    edges = [GraphEdge(source=e["source"], target=e["target"], kind=e["kind"],
                       properties=dict(e.get("properties", {})))
             for e in doc["edges"]]
    return PropertyGraph(nodes=nodes, edges=edges)


def write_graph_json(graph: PropertyGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_graph_json(graph), indent=2,
                                     sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# MERGE script
# ---------------------------------------------------------------------------

def _literal(value: object) -> str:
    """Render one property value as a graph-script literal.

    Strings are single-quoted with backslash escapes; nested mappings are not
    representable as graph properties, so they are embedded as JSON strings.
    """
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace("'", "\\'")
        return f"'{escaped}'"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_literal(v) for v in value) + "]"
    if isinstance(value, Mapping):
        return _literal(json.dumps(value, sort_keys=True))
    raise TypeError(f"cannot render {type(value).__name__} as a graph literal")


def _set_clause(alias: str, properties: Mapping[str, object]) -> str:
    parts = [f"{alias}.{key} = {_literal(value)}"
             for key, value in sorted(properties.items())]
    return (" SET " + ", ".join(parts)) if parts else ""


def render_merge_script(graph: PropertyGraph) -> str:
    """One MERGE statement per node and edge; safe to replay any number of times.

    Nodes merge on (label, id); edges merge on the endpoint pair and edge
    label, then overwrite their properties, so the script converges to the
    same database state no matter how often it runs.
    """
    lines: list[str] = []
    for node in graph.nodes:
        lines.append(f"MERGE (n:{node.kind} {{id: {_literal(node.node_id)}}})"
                     f"{_set_clause('n', node.properties)};")
    for edge in graph.edges:
        lines.append(
            f"MATCH (s {{id: {_literal(edge.source)}}}), "
            f"(t {{id: {_literal(edge.target)}}}) "
            f"MERGE (s)-[r:{edge.kind}]->(t){_set_clause('r', edge.properties)};")
    return "\n".join(lines) + "\n"


def write_merge_script(graph: PropertyGraph, path: str | Path) -> None:
    Path(path).write_text(render_merge_script(graph), encoding="utf-8")


# ---------------------------------------------------------------------------
# CSV pair
# ---------------------------------------------------------------------------

def render_csv_pair(graph: PropertyGraph) -> tuple[str, str]:
    """(nodes_csv, edges_csv); properties are one JSON-encoded column."""
    import csv
    import io

    nodes_buf = io.StringIO()
    writer = csv.writer(nodes_buf, lineterminator="\n")
    writer.writerow(["id", "kind", "properties"])
    for node in graph.nodes:
        writer.writerow([node.node_id, node.kind,
                         json.dumps(dict(node.properties), sort_keys=True)])

    edges_buf = io.StringIO()
    writer = csv.writer(edges_buf, lineterminator="\n")
    writer.writerow(["source", "target", "kind", "properties"])
    for edge in graph.edges:
        writer.writerow([edge.source, edge.target, edge.kind,
                         json.dumps(dict(edge.properties), sort_keys=True)])
    return nodes_buf.getvalue(), edges_buf.getvalue()


def write_csv_pair(graph: PropertyGraph, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    nodes_csv, edges_csv = render_csv_pair(graph)
    nodes_path = out / "nodes.csv"
    edges_path = out / "edges.csv"
    nodes_path.write_text(nodes_csv, encoding="utf-8")
    edges_path.write_text(edges_csv, encoding="utf-8")
    return nodes_path, edges_path


def export_graph(graph: PropertyGraph, out_dir: str | Path,
                 formats: Iterable[str] = ("json", "script", "csv")) -> list[Path]:
    """Write the requested formats into out_dir; returns the files written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for fmt in formats:
        if fmt == "json":
            path = out / "graph.json"
            write_graph_json(graph, path)
            written.append(path)
        elif fmt == "script":
            path = out / "graph_merge.cypher"
            write_merge_script(graph, path)
            written.append(path)
        elif fmt == "csv":
            written.extend(write_csv_pair(graph, out))
        else:
            raise ValueError(f"unknown graph export format {fmt!r}")
    return written
