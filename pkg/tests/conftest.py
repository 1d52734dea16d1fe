import numpy as np
import pytest

from src.ensemble import Ensemble
from src.evaluation import synthesize_logistic_dataset
from src.models import Dataset, GaussianPrior
from src.utils import ArtifactStore, Logger


@pytest.fixture(autouse=True)
def quiet_logger():
    Logger.set_level('WARNING')
    yield
    Logger.set_level('INFO')


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_data():
    """D=3, N=10 known-parameter instance"""
    data, _ = synthesize_logistic_dataset(3, 10, seed=7)
    return data


@pytest.fixture
def flat_data():
    """Φ = 0: the likelihood does not depend on θ"""
    return Dataset(np.zeros((2, 3)), np.array([0, 1, 1]))


@pytest.fixture
def unit_prior():
    return GaussianPrior.isotropic(3)


@pytest.fixture
def small_ensemble(rng):
    return Ensemble(rng.standard_normal((20, 3)))


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(tmp_path / "out")
