import numpy as np
import pytest


def cgauss(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def contraction(rng, n, d, r):
    """Random d-tuple with row norm exactly ``r`` (independent of the package's generators)."""
    Z = cgauss(rng, (d, n, n))
    G = sum(z @ z.conj().T for z in Z)
    return Z * (r / np.sqrt(np.linalg.eigvalsh(G)[-1]))


def unit(n, i, j):
    E = np.zeros((n, n), dtype=complex)
    E[i, j] = 1
    return E


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
