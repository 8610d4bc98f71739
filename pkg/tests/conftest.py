import numpy as np
import pytest

from ttmemory import Schedule, SpinBosonModel, SpinBosonParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_density_matrix(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_unitary(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)) @ v.conj().T


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


@pytest.fixture(scope="session")
def small_model():
    """d_osc = 2 case model: cheap enough for exhaustive unit checks."""
    return SpinBosonModel(
        SpinBosonParams(d_osc=2), Schedule(delta=1.0, num_steps=4, substeps=8)
    )


@pytest.fixture(scope="session")
def tiny_model():
    """Three-step schedule used by the naive-pipeline oracle tests."""
    return SpinBosonModel(
        SpinBosonParams(d_osc=2), Schedule(delta=0.7, num_steps=3, substeps=4)
    )


@pytest.fixture(scope="session")
def decoupled_model():
    """All couplings zero: the reduced dynamics is a pure unitary rotation."""
    params = SpinBosonParams(couplings=(0.0,) * 5, d_osc=2)
    return SpinBosonModel(params, Schedule(delta=1.0, num_steps=3, substeps=4))
