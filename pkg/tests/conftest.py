import numpy as np
import pytest

from dressing_forge import ExtendedFrame, VacuumSeed, project_onto_span


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def torus_seed():
    return VacuumSeed.constant([1.0, 0.7])


@pytest.fixture
def torus_frame(torus_seed):
    return ExtendedFrame(torus_seed)


@pytest.fixture
def torus3_frame():
    return ExtendedFrame(VacuumSeed.constant([1.0, 0.7, 1.3]))


@pytest.fixture
def pi_diag():
    return project_onto_span(np.array([1.0, 1.0]) / np.sqrt(2))


@pytest.fixture
def pi_perp_torus():
    # rank-1 real projection orthogonal to h(0) = (1, 0.7)
    v = np.array([0.7, -1.0])
    return project_onto_span(v / np.linalg.norm(v))


def random_unit_vector(rng, n, real=False):
    v = rng.normal(size=n) + (0 if real else 1j * rng.normal(size=n))
    return v / np.linalg.norm(v)
