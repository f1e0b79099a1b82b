import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

from knotmu import corpus  # noqa: E402
from knotmu.config import Settings, load_settings  # noqa: E402


@pytest.fixture
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture
def settings(tmp_path) -> Settings:
    # Isolated from any knotmu.toml or KNOTMU_* variables on the host.
    return load_settings(path=tmp_path / "absent.toml", env={})


@pytest.fixture
def load_diagram():
    return corpus.load_diagram


@pytest.fixture
def load_knot():
    return corpus.load_knot
