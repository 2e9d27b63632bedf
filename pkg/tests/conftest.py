import pytest

from gwcoal import lnary_model, validate


@pytest.fixture
def binary_unit():
    """f = z^2, g = z: the deterministic six-leaf tree at n = 2."""
    return lnary_model(2, 1)


@pytest.fixture
def coin_offspring():
    return validate({1: 0.5, 2: 0.5}, {1: 1.0})


@pytest.fixture
def coin_both():
    return validate({1: 0.5, 2: 0.5}, {1: 0.5, 2: 0.5})
