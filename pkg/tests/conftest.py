import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from shgpla import Block, ModelParams, solve

settings.register_profile(
    "pkg", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("pkg")


@pytest.fixture(scope="session")
def resonant():
    return ModelParams.resonant(1.0)


@pytest.fixture(scope="session")
def block100():
    return Block(0, 100)


@pytest.fixture(scope="session")
def sol100(block100, resonant):
    return solve(block100, resonant)


@pytest.fixture(scope="session")
def oracle100(block100, resonant):
    return solve(block100, resonant, method="oracle")


def dense(T):
    return T.dense()


def align_signs(A, B):
    """Flip columns of B so that each has a non-negative dot product with A."""
    sgn = np.sign(np.einsum("ij,ij->j", A, B))
    sgn[sgn == 0] = 1.0
    return B * sgn
