from __future__ import annotations

import numpy as np
import pytest

from acuterigid.generators import generate_perturbed_acute, hex_patch


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def hex1():
    return hex_patch(1)


@pytest.fixture(scope="session")
def hex3():
    return hex_patch(3)


@pytest.fixture(scope="session")
def perturbed3():
    return generate_perturbed_acute(3, 0.05, seed=1, epsilon=0.2)
