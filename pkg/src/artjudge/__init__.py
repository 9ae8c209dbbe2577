"""Artist-influence adjudication over image and text embeddings.

The package judges directed claims of the form "artist A influenced artist
B". A hard chronology gate filters the impossible cases for free; everything
else runs through evidence tools (visual neighbors, biography pathways,
style-manifold distances, concept overlap), a tool-calling controller, and
an adversarial critic whose challenges discount the provisional score before
the verdict is derived.
"""

from .backends import (
    AgentAction,
    CriticResponse,
    HeuristicController,
    HeuristicCritic,
    ScriptedController,
    ScriptedCritic,
    make_backends,
)
from .agent import adjudicate_pair, falsify, serialize_context
from .benchmark import (
    MetricBundle,
    compute_metrics,
    make_folds,
    roc_auc,
    roc_points,
    tier_rejection,
    tune_threshold,
)
from .config import RunConfig, load_config
from .core import (
    ArtistProfile,
    ArtworkRecord,
    Corpus,
    DirectedPair,
    EvidenceClaim,
    Label,
    Tier,
    Verdict,
    VerdictTuple,
    derive_verdict,
    load_corpus,
    save_corpus,
    validate_corpus,
)
from .engine import Engine, build_engine
from .errors import (
    ArtJudgeError,
    BackendError,
    DataError,
    FormatError,
    ValidationError,
)
from .graph_export import export_graph, materialize_graph
from .iconclass import ConceptGraph, code_distance, load_graph, normalize_codes
from .manifold import WolfflinBasis, build_basis, pole_probability, project
from .retrieval import build_index, generate_candidates, timeline_gate
from .runner import ablate, run_benchmark, sweep_gamma
from .store import EmbeddingMatrix, cosine, read_store, write_store
from .tools import ToolContext, ToolRegistry, mask_text

__version__ = "0.1.0"

__all__ = [
    "AgentAction",
    "ArtJudgeError",
    "ArtistProfile",
    "ArtworkRecord",
    "BackendError",
    "ConceptGraph",
    "Corpus",
    "CriticResponse",
    "DataError",
    "DirectedPair",
    "EmbeddingMatrix",
    "Engine",
    "EvidenceClaim",
    "FormatError",
    "HeuristicController",
    "HeuristicCritic",
    "Label",
    "MetricBundle",
    "RunConfig",
    "ScriptedController",
    "ScriptedCritic",
    "Tier",
    "ToolContext",
    "ToolRegistry",
    "ValidationError",
    "Verdict",
    "VerdictTuple",
    "WolfflinBasis",
    "ablate",
    "adjudicate_pair",
    "build_basis",
    "build_engine",
    "build_index",
    "code_distance",
    "compute_metrics",
    "cosine",
    "derive_verdict",
    "export_graph",
    "falsify",
    "generate_candidates",
    "load_config",
    "load_corpus",
    "load_graph",
    "make_backends",
    "make_folds",
    "mask_text",
    "materialize_graph",
    "normalize_codes",
    "pole_probability",
    "project",
    "read_store",
    "roc_auc",
    "roc_points",
    "run_benchmark",
    "save_corpus",
    "serialize_context",
    "sweep_gamma",
    "tier_rejection",
    "timeline_gate",
    "tune_threshold",
    "validate_corpus",
    "write_store",
]
