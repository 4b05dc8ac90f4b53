from pathlib import Path

import numpy as np
import pytest
import ujson

RESOURCES = Path(__file__).parent / "resources"


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture(scope="session")
def golden_heights() -> dict[str, float]:
    """Published heights keyed by the `IntegerPolynomial.parse` notation"""
    return ujson.loads((RESOURCES / "golden_heights.json").read_text())
