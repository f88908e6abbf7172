import numpy as np
import pytest

from legvp.operators import Plasma, charge_imbalance
from legvp.state import DomainConfig, Species, SpectralState


def hermitian_random(rng, n_l, n_k, scale=0.1):
    c = scale * (rng.standard_normal((n_l, n_k)) + 1j * rng.standard_normal((n_l, n_k)))
    c = 0.5 * (c + np.conj(c[:, ::-1]))
    c[:, (n_k - 1) // 2] = c[:, (n_k - 1) // 2].real
    return c


def neutralized(config: DomainConfig, species, state: SpectralState) -> Plasma:
    """Plasma whose fixed background exactly cancels the state's k=0 charge."""
    probe = Plasma(config, species, background_charge=0.0)
    return Plasma(config, species,
                  background_charge=-charge_imbalance(probe, state).real)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture
def small_config():
    return DomainConfig(L=2.5, v_a=-4.0, v_b=6.0, n_legendre=12, n_fourier=3)


@pytest.fixture
def electron():
    return Species("electron", q=-1.0, m=1.0, nu=0.5, gamma=0.5,
                   penalty_mode="skip_first_three")
