"""Shared fixtures: the synthetic mini corpus, engines, and backends.

The mini corpus is generated once per session; tests must treat the
directory and the engine as read-only. Anything that needs a mutated corpus
copies it into its own tmp_path first.
"""

from __future__ import annotations

from pathlib import Path
from typing import NamedTuple

import pytest

from artjudge.backends import make_backends
from artjudge.engine import Engine, build_engine
from artjudge.synth import MiniSpec, build_impossible_corpus, build_mini_corpus

GOLDEN_DIR = Path(__file__).parent / "golden"


class MiniFixture(NamedTuple):
    path: Path
    spec: MiniSpec


@pytest.fixture(scope="session")
def mini(tmp_path_factory: pytest.TempPathFactory) -> MiniFixture:
    path = tmp_path_factory.mktemp("mini_corpus")
    spec = build_mini_corpus(path)
    return MiniFixture(path=path, spec=spec)


@pytest.fixture(scope="session")
def mini_engine(mini: MiniFixture) -> Engine:
    return build_engine(mini.path)


@pytest.fixture(scope="session")
def impossible_dir(tmp_path_factory: pytest.TempPathFactory) -> Path:
    path = tmp_path_factory.mktemp("impossible_corpus")
    build_impossible_corpus(path, n_pairs=50)
    return path


@pytest.fixture()
def heuristic_backends():
    return make_backends("heuristic")
