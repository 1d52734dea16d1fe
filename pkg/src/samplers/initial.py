from typing import Union

import numpy as np
import scipy.linalg

from .base import SamplerConfigError
from ..config import SecondOrderConfig
from ..ensemble import Ensemble
from ..meanfield.moments import GaussianMoments
from ..models import GaussianPrior
from ..utils.seeding import SeedStreams


Gaussian = Union[GaussianPrior, GaussianMoments]
RandomSource = Union[int, np.random.Generator]


def sample_prior_ensemble(gaussian: Gaussian, ensemble_size: int, seed: RandomSource) -> Ensemble:
    """J i.i.d. draws m + L ξ with L the Cholesky factor of the covariance.

    An integer seed is turned into the ``init-ensemble`` stream; a Generator
    is used as is.
    """
    if ensemble_size < 1:
        raise SamplerConfigError(f"Ensemble size must be positive, got {ensemble_size}")
    try:
        factor = scipy.linalg.cholesky(gaussian.covariance, lower=True)
    except np.linalg.LinAlgError as e:
        raise SamplerConfigError(f"Initial covariance is not positive definite: {e}") from e
    rng = seed if isinstance(seed, np.random.Generator) else SeedStreams(seed).generator(SeedStreams.INIT_ENSEMBLE)
    xi = rng.standard_normal((ensemble_size, gaussian.mean.size))
    return Ensemble(gaussian.mean + xi @ factor.T)


def initial_moments(prior: GaussianPrior, config: SecondOrderConfig) -> GaussianMoments:
    """N(m_0, P_0) for the second-order sampler; equals the prior unless overridden"""
    return GaussianMoments(prior.mean + config.initial_mean_offset, config.initial_cov_scale * prior.covariance)
