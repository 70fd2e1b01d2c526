import numpy as np
import pytest

from srhd import EosConfig


@pytest.fixture
def eos53():
    return EosConfig(gamma=5.0 / 3.0)


@pytest.fixture
def eos43():
    return EosConfig(gamma=4.0 / 3.0)


@pytest.fixture
def eos14():
    return EosConfig(gamma=1.4)


def random_primitive(rng, n, wmax=10.0, p_lo=1e-6, p_hi=1e3, rho_lo=1e-3, rho_hi=1e3):
    """n random admissible primitive states with Lorentz factors up to wmax."""
    rho = np.exp(rng.uniform(np.log(rho_lo), np.log(rho_hi), n))
    p = np.exp(rng.uniform(np.log(p_lo), np.log(p_hi), n))
    W = rng.uniform(1.0, wmax, n)
    speed = np.sqrt(1.0 - 1.0 / W**2)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    V = np.empty((n, 4))
    V[:, 0] = rho
    V[:, 1] = speed * np.cos(phi)
    V[:, 2] = speed * np.sin(phi)
    V[:, 3] = p
    return V
