"""Assemble a runnable engine from a corpus directory.

Expected directory layout:

    artists.json  artworks.json  pairs.json  biographies.json
    visual.ajem          artwork embeddings (keys = artwork embedding keys)
    text.ajem            biography doc + query embeddings (optional)
    text_masked.ajem     masked-text embeddings for masked runs (optional)
    poles.ajem           style pole embeddings, keys axisN+/axisN-
    poles_generic.ajem   non-theory prompt poles (optional, for ablation)
    codes.jsonl          artwork concept code sets
    iconclass.txt        concept code vocabulary (one per line)
    iconclass_edges.txt  optional extra parent<TAB>child edges
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

from .config import RunConfig
from .core import Corpus, load_corpus
from .errors import DataError
from .iconclass import ConceptGraph, load_code_sets, load_graph
from .manifold import WolfflinBasis, build_basis, compute_signatures
from .retrieval import VectorIndex, build_index
from .store import EmbeddingMatrix, read_store
from .tools import CueLexicons, ToolContext, ToolRegistry, load_lexicons

logger = logging.getLogger(__name__)

# export pipelines stamp "encoder=<name>@<version>" into store comments
_ENCODER_PIN = re.compile(r"\bencoder=(\S+)")


def _encoder_pin(matrix: EmbeddingMatrix) -> str | None:
    found = _ENCODER_PIN.search(matrix.comment)
    return found.group(1) if found else None


@dataclass
class Engine:
    corpus: Corpus
    registry: ToolRegistry
    basis: WolfflinBasis
    concept_graph: ConceptGraph
    visual_store: EmbeddingMatrix
    config: RunConfig
    index: VectorIndex | None = None

    def ensure_index(self) -> VectorIndex:
        if self.index is None:
            self.index = build_index(self.visual_store, self.config.index)
        return self.index


def build_engine(corpus_dir: str | Path, config: RunConfig | None = None,
                 mask_biographies: bool | None = None,
                 generic_prompts: bool = False,
                 disable_tool: str | None = None,
                 lexicon_dir: str | Path | None = None,
                 with_index: bool = False) -> Engine:
    """Load every corpus artifact and wire the tool registry.

    `mask_biographies` overrides the config flag when not None; the other
    switches exist for ablation arms (swap pole store, drop one tool).
    """
    cfg = config or RunConfig()
    root = Path(corpus_dir)
    if not root.is_dir():
        raise DataError(f"corpus directory not found: {root}")

    corpus = load_corpus(root)
    visual = read_store(root / "visual.ajem")

    pole_file = "poles_generic.ajem" if generic_prompts else "poles.ajem"
    if generic_prompts and not (root / pole_file).exists():
        raise DataError(f"generic-prompt ablation needs {pole_file} in the corpus")
    poles = read_store(root / pole_file)
    # artwork rows and pole rows live in one space, so their encoder pins
    # must agree when both stores carry one; stores without a pin stay silent
    visual_pin, pole_pin = _encoder_pin(visual), _encoder_pin(poles)
    if visual_pin and pole_pin and visual_pin != pole_pin:
        logger.warning("visual.ajem and %s pin different encoders (%s vs %s); "
                       "style projections may not be meaningful",
                       pole_file, visual_pin, pole_pin)
    basis = build_basis(poles, degeneracy_tol=cfg.manifold.degeneracy_tol)

    graph = load_graph(root / "iconclass.txt",
                       root / "iconclass_edges.txt" if (root / "iconclass_edges.txt").exists() else None)
    codes_path = root / "codes.jsonl"
    artwork_codes = load_code_sets(codes_path) if codes_path.exists() else {}

    masking = cfg.agent.mask_biographies if mask_biographies is None else mask_biographies
    lexicons: CueLexicons = load_lexicons(lexicon_dir)

    text_store = None
    text_name = "text_masked.ajem" if masking else "text.ajem"
    if (root / text_name).exists():
        text_store = read_store(root / text_name)
    elif masking and (root / "text.ajem").exists():
        # no masked-text embeddings shipped: retrieval falls back to lexical
        text_store = None

    ctx = ToolContext(
        corpus=corpus,
        visual_store=visual,
        basis=basis,
        signatures=compute_signatures(corpus, visual, basis),
        concept_graph=graph,
        artwork_codes=artwork_codes,
        lexicons=lexicons,
        text_store=text_store,
        mask=lexicons.mask_lexicon() if masking else None,
        delta_years=cfg.candidates.delta_years,
        temperature=cfg.manifold.temperature,
        min_level=cfg.concepts.min_level,
        decay=cfg.concepts.decay,
    )
    registry = ToolRegistry(ctx=ctx)
    if disable_tool:
        registry = registry.without(disable_tool)

    engine = Engine(corpus=corpus, registry=registry, basis=basis,
                    concept_graph=graph, visual_store=visual, config=cfg)
    if with_index:
        engine.ensure_index()
    return engine
