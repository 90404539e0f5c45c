import logging

import pytest

from flatsteer.gevrey_core import WeightSequence, gevrey_step


@pytest.fixture(autouse=True)
def _debug_logging(caplog):
    caplog.set_level(logging.DEBUG, logger="flatsteer")


@pytest.fixture
def halving_weights():
    """``a_k = 2**-(k+1)``, summing to 1."""
    return WeightSequence.geometric(first=0.5, ratio=0.5, length=64)


@pytest.fixture
def factorial_weights():
    """Weights with moduli ``(2p)!``."""
    return WeightSequence.squared_factorial(length=4096)


@pytest.fixture
def step():
    return gevrey_step(sigma=1.5, T=1.0)
