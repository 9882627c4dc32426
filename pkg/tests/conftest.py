import numpy as np
import pytest

from digitforge.markov import build_chain
from digitforge.streams import UniformStream
from digitforge.subdivision import PseudoGoldenBeta

SQRT5 = 5 ** 0.5
PHI = (1 + SQRT5) / 2


@pytest.fixture
def stream():
    return UniformStream(12345)


@pytest.fixture(scope="session")
def golden():
    return PseudoGoldenBeta(2)


@pytest.fixture(scope="session")
def golden_chain(golden):
    return build_chain(golden, 1)


@pytest.fixture
def gen():
    return np.random.default_rng(99)
