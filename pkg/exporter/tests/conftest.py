import shutil
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def workspace(tmp_path):
    """A disposable copy of the fixture tree; returns the manifest path."""
    for item in FIXTURES.iterdir():
        shutil.copy(item, tmp_path / item.name)
    return tmp_path / "manifest.json"


@pytest.fixture(scope="session")
def golden_dir():
    return GOLDEN
