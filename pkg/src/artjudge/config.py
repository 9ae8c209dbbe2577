"""Run configuration.

One flat set of dataclasses covers every tunable the engine exposes. A config
file (TOML or JSON) provides overrides on top of the defaults below, and CLI
flags override the file. Every report writes back the fully resolved values so
a run can be reproduced from its own output.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import DataError

try:  # 3.11+ stdlib, else the tomli backport
    import tomllib as _toml
except ImportError:  # pragma: no cover - depends on interpreter
    import tomli as _toml


@dataclass
class IndexConfig:
    backend: str = "smallworld"      # "smallworld" | "exact"
    m: int = 32                      # graph degree
    ef_construction: int = 200
    ef_search: int = 64
    seed: int = 0                    # level assignment RNG


@dataclass
class CandidateConfig:
    top_k: int = 10
    min_similarity: float = 0.70     # cosine floor, inclusive
    delta_years: int = 20            # posthumous exposure window


@dataclass
class ManifoldConfig:
    temperature: float = 1.0         # pole-probability softness
    degeneracy_tol: float = 1e-8


@dataclass
class ConceptConfig:
    decay: float = 0.8               # depth decay for code distance
    min_level: int = 3               # ancestor level for normalization/alignment


@dataclass
class AgentConfig:
    max_steps: int = 8
    decision_threshold: float = 0.5
    gamma: float = 2.0                              # critic penalty weight
    critic_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    context_budget_chars: int = 2400                # ~600 tokens at 4 chars/token
    mask_biographies: bool = False


@dataclass
class BenchConfig:
    folds: int = 5
    seed: int = 0
    tune_threshold: bool = True
    backend: str = "heuristic"       # "heuristic" | "remote"


@dataclass
class RemoteConfig:
    url_env: str = "ARTJUDGE_BACKEND_URL"
    model_env: str = "ARTJUDGE_BACKEND_MODEL"
    key_env: str = "ARTJUDGE_BACKEND_KEY"
    timeout: float = 30.0
    max_attempts: int = 3
    backoff_base: float = 0.5
    backoff_cap: float = 8.0


@dataclass
class RunConfig:
    index: IndexConfig = field(default_factory=IndexConfig)
    candidates: CandidateConfig = field(default_factory=CandidateConfig)
    manifold: ManifoldConfig = field(default_factory=ManifoldConfig)
    concepts: ConceptConfig = field(default_factory=ConceptConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)
    remote: RemoteConfig = field(default_factory=RemoteConfig)

    def resolved(self) -> dict[str, Any]:
        """JSON-ready dict of every effective value, for run reports."""
        out = dataclasses.asdict(self)
        out["agent"]["critic_weights"] = list(self.agent.critic_weights)
        return out


_SECTIONS = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _apply_section(section_obj: Any, values: Mapping[str, Any], section: str) -> None:
    names = {f.name for f in dataclasses.fields(section_obj)}
    for key, value in values.items():
        if key not in names:
            raise DataError(f"unknown config key {section}.{key}")
        if key == "critic_weights":
            value = tuple(float(v) for v in value)
        setattr(section_obj, key, value)


def load_config(path: str | Path | None = None,
                overrides: Mapping[str, Mapping[str, Any]] | None = None) -> RunConfig:
    """Build a RunConfig from defaults, an optional file, and explicit overrides.

    `overrides` is a two-level mapping like {"agent": {"gamma": 1.0}} and wins
    over the file. Unknown sections or keys raise DataError rather than being
    silently ignored.
    """
    config = RunConfig()
    layers: list[Mapping[str, Any]] = []
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise DataError(f"config file not found: {p}")
        if p.suffix.lower() == ".toml":
            layers.append(_toml.loads(p.read_text(encoding="utf-8")))
        elif p.suffix.lower() == ".json":
            layers.append(json.loads(p.read_text(encoding="utf-8")))
        else:
            raise DataError(f"config file must be .toml or .json, got: {p.name}")
    if overrides:
        layers.append(overrides)
    for layer in layers:
        for section, values in layer.items():
            if section not in _SECTIONS:
                raise DataError(f"unknown config section: {section}")
            if not isinstance(values, Mapping):
                raise DataError(f"config section {section} must be a table/object")
            _apply_section(getattr(config, section), values, section)
    return config
