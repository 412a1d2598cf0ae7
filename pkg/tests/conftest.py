import numpy as np
import pytest

from envs import make_env


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def dst():
    return make_env("dst")


@pytest.fixture
def minecart():
    return make_env("minecart-deterministic")


@pytest.fixture
def run_dir(tmp_path):
    return tmp_path / "run"
