import os

import numpy as np
import pytest

from landscape.models import LandscapeSpec


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def rank_one_3() -> LandscapeSpec:
    return LandscapeSpec.transition_probability(3)


@pytest.fixture
def nondegenerate_3() -> LandscapeSpec:
    return LandscapeSpec.from_eigenvalues([0.9, 0.5, 0.1], [0.8, 0.3, -0.2])


@pytest.fixture
def mixed_spec() -> LandscapeSpec:
    """Degenerate blocks on both sides, N = 5."""
    return LandscapeSpec((0.9, 0.4, 0.0), (2, 1, 2), (1.0, 0.2), (3, 2))


@pytest.fixture(autouse=True)
def clean_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep LANDSCAPE_* variables from the outer shell out of Settings."""
    for key in list(os.environ):
        if key.startswith("LANDSCAPE_"):
            monkeypatch.delenv(key)
