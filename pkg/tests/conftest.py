"""Shared fixtures; puts the repository root on sys.path."""
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

import config  # noqa: E402
from model import AccessStructure, CqBroadcastChannel  # noqa: E402

SAMPLES = ROOT / "samples"


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def three_user_flip():
    return CqBroadcastChannel.binary_flip([0.05, 0.11, 0.2], name="three_user_flip")


@pytest.fixture
def three_user_access():
    return AccessStructure.from_sets(3, [{1, 2}, {2, 3}])


@pytest.fixture
def two_user_flip():
    return CqBroadcastChannel.binary_flip([0.11, 0.11], name="two_user_flip")


@pytest.fixture
def samples_dir():
    return SAMPLES


@pytest.fixture
def reports_dir(tmp_path, monkeypatch):
    """Redirect bare --out names into a per-test directory."""
    monkeypatch.setattr(config, "REPORTS_DIR", tmp_path)
    return tmp_path
