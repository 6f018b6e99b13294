# tests/conftest.py
import os
import sys

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import numpy as np
import pytest

from core.lti import generate_paper_system
from core.models import NoiseConfig, System


@pytest.fixture(autouse=True)
def quiet_env(monkeypatch, tmp_path):
    """Keep Config off any developer .env and away from the working tree."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("SYSID_VERBOSE", "0")
    monkeypatch.setenv("SYSID_OUTPUT_DIR", str(tmp_path / "results"))


@pytest.fixture
def scalar_system():
    """x' = 0.5x + u, y = x."""
    return System(A=[[0.5]], B=[[1.0]], C=[[1.0]], D=[[0.0]])


@pytest.fixture
def small_system():
    return generate_paper_system(8, 3, 2, bandwidth=2, target_rho=0.8, seed=7)


@pytest.fixture
def diagonal_system():
    A = np.diag([0.8, 0.5, -0.3, 0.2])
    B = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 0.5]])
    C = np.array([[1.0, 0.0, 0.5, 0.0], [0.0, 1.0, 0.0, 1.0]])
    return System(A=A, B=B, C=C, D=np.zeros((2, 2)))


@pytest.fixture
def noisy():
    return NoiseConfig.from_variances(0.1, 0.1, sigma_u=1.0, seed=11)
