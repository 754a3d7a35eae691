import numpy as np
import pytest

from bvmixed.mesh import from_nodes


def random_mesh(rng, n_min=2, n_max=40):
    n = int(rng.integers(n_min, n_max + 1))
    interior = np.sort(rng.uniform(0.0, 1.0, size=n - 1))
    return from_nodes(np.concatenate(([0.0], interior, [1.0])))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
