import numpy as np
import pytest

from fanolab import discrete, spectral

OMEGA_S = 1.0
OMEGA_C = 5.0
OMEGA_MAX = 50.0


def ohmic(eta, s=1.0, **kw):
    return spectral.SpectralDensity.ohmic(eta, OMEGA_C, s, **kw)


def uniform(n, omega_max=OMEGA_MAX):
    return spectral.QuadratureSpec("uniform_trapezoid", n, omega_max)


def panels(n=4096, omega_max=OMEGA_MAX):
    return spectral.QuadratureSpec("gauss_legendre_panels", n, omega_max)


@pytest.fixture(scope="session")
def strong():
    return ohmic(0.1)


@pytest.fixture(scope="session")
def weak():
    return ohmic(0.01)


@pytest.fixture(scope="session")
def strong_bath(strong):
    return discrete.discretize(strong, uniform(4096))


@pytest.fixture(scope="session")
def strong_spectrum(strong_bath):
    return discrete.diagonalize(discrete.arrowhead(OMEGA_S, strong_bath))


@pytest.fixture(scope="session")
def weak_bath(weak):
    return discrete.discretize(weak, uniform(4096))


@pytest.fixture(scope="session")
def weak_spectrum(weak_bath):
    return discrete.diagonalize(discrete.arrowhead(OMEGA_S, weak_bath))


@pytest.fixture
def rng():
    return np.random.default_rng(20141015)
