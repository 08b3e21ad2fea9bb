"""Shared fixtures for QmeLab tests."""
import json
import sys
import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from lib.densmat import random_density_matrix  # noqa: E402
from lib.utils import set_quiet  # noqa: E402


@pytest.fixture
def temp_directory():
    """Create a temporary directory that is cleaned up after the test."""
    temp_dir = tempfile.mkdtemp()
    yield Path(temp_dir)
    shutil.rmtree(temp_dir, ignore_errors=True)


@pytest.fixture
def rng():
    """Seeded numpy Generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def random_states(rng):
    """Factory for lists of random density matrices of a given dimension."""
    def make(dim, count):
        return [random_density_matrix(dim, rng) for _ in range(count)]
    return make


@pytest.fixture
def sample_config(temp_directory):
    """Minimal configuration document that keeps logs and results inside the temp directory."""
    return {
        "experiment": "fig3",
        "output": {"path": str(temp_directory / "results.csv"), "format": "csv"},
        "logging": {
            "folder": str(temp_directory / "logs"),
            "file_name": "qmelab.log",
            "level": "INFO",
        },
    }


@pytest.fixture
def config_file(temp_directory, sample_config):
    """Factory writing a configuration document (sample_config updated with overrides) to disk."""
    def make(name="config.json", **sections):
        document = dict(sample_config)
        document.update(sections)
        path = temp_directory / name
        path.write_text(json.dumps(document))
        return path
    return make


@pytest.fixture(autouse=True)
def console_echo():
    """Every test starts and ends with message_processor echoing to the console."""
    set_quiet(False)
    yield
    set_quiet(False)
