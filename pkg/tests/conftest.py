import numpy as np
import pytest

from cohesion import DissimilaritySpace


def random_space(rng, n, dim=2, masses="random", clustered=False):
    """Tie-free random Euclidean space (ties have probability zero)."""
    if clustered:
        k = max(1, n // 3)
        centres = rng.normal(scale=20.0, size=(k, dim))
        x = centres[rng.integers(0, k, n)] + rng.normal(scale=rng.uniform(0.05, 1.0), size=(n, dim))
    else:
        x = rng.normal(size=(n, dim))
    if masses == "uniform":
        p = None
    else:
        p = rng.dirichlet(np.ones(n))
    return DissimilaritySpace.from_coords(x, p)


THREE = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]])  # d12 < d13 < d23


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def three_point():
    return DissimilaritySpace(THREE, [0.2, 0.3, 0.5], ["x1", "x2", "x3"])
