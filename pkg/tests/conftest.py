import numpy as np
import pytest

from arealaw.core import BipartiteCut, DensityOperator, SubState


def random_density(rng, dim, rank=None):
    """Haar-ish random density operator of the given dimension."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    return DensityOperator(m / np.real(np.trace(m)))


def random_substate(rng, dim, rank=None):
    scale = 0.2 + 0.8 * rng.random()
    return SubState(random_density(rng, dim, rank).mat * scale)


def random_pure(rng, dim):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def cut22():
    return BipartiteCut.chain(2, 1, local_dim=2)


@pytest.fixture
def cut44():
    return BipartiteCut.chain(4, 2, local_dim=2)
