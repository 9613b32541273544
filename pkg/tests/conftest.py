import numpy as np
import pytest

from trampaatomica.config import RB87_MASS
from trampaatomica.experiment import ExperimentConfig
from trampaatomica.mirror import MirrorParams
from trampaatomica.wellqm import ModeIndex, QuantumState, WellGeometry


@pytest.fixture(scope="session")
def geom():
    """Pozo cúbico de 1 µm con Rb-87."""
    return WellGeometry.cubic(1e-6, RB87_MASS)


@pytest.fixture(scope="session")
def geom_rect():
    return WellGeometry(1e-6, 1.3e-6, 0.8e-6, RB87_MASS)


@pytest.fixture(scope="session")
def espejo():
    return MirrorParams.rb87_reference()


@pytest.fixture(scope="session")
def superposicion():
    return QuantumState.superposition([((1, 1, 1), 1.0), ((2, 1, 1), 1.0j)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def experimento(geom, espejo):
    """Campaña corta con ruido moderado; las réplicas se reducen para que las pruebas sean rápidas."""
    return ExperimentConfig(
        geometry=geom,
        mode=ModeIndex(1, 1, 1),
        mirror=espejo,
        noise_sigma=0.0,
        n_bounces=2000,
        seed=11,
        null_replicates=200,
        power_replicates=50,
    )
