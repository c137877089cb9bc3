import numpy as np
import pytest

from privstate.states import random_density
from privstate.tensor_core import DenseState, FactorLayout


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(dims, parties, seed, rank=None) -> DenseState:
    layout = FactorLayout(tuple(dims), tuple(parties))
    return DenseState(random_density(layout.total_dim, seed, rank), layout)
