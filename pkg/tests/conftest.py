import numpy as np
import pytest

from hwl.dyadic import DyadicModel, LeafFunction, Weight


def random_weight(model, rng, sigma=1.0):
    return Weight(LeafFunction(model, np.exp(sigma * rng.standard_normal(model.n_leaves))))


def random_function(model, rng):
    return LeafFunction(model, rng.standard_normal(model.n_leaves))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
