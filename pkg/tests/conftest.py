import numpy as np
import pytest
from hypothesis import settings

import hamindex as hx

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def rotation():
    return hx.builtin("rotation").family


@pytest.fixture(scope="session")
def rotation_field(rotation):
    # shared across the session so the monodromy cache is reused
    return hx.MonodromyField(rotation)


@pytest.fixture(scope="session")
def block_rotation():
    return hx.builtin("block_rotation").family


@pytest.fixture(scope="session")
def twisted():
    return hx.builtin("twisted").family


@pytest.fixture(scope="session")
def zero_family():
    return hx.builtin("zero_field").family


def constant_family(n: int, value: str) -> hx.CoefficientFamily:
    d = 2 * n
    rows = [[value if i == j else "0" for j in range(d)] for i in range(d)]
    return hx.CoefficientFamily.from_strings(n, rows)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(987654321)
