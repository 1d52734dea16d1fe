from .moments import GaussianMoments, MomentsError
from .quadrature import GAUSS_HERMITE_ORDER, gaussian_expectations, sigmoid_expectations
from .ode import (
    IntegratorInstabilityError,
    MomentTrajectory,
    equilibrium_residual,
    integrate_moments,
    integrate_to_stationarity,
    moment_ode_rhs,
)
from .laplace import LaplaceConvergenceError, laplace_fit, probit_predictive
from .importance import PosteriorMeanEstimate, importance_posterior_mean

__all__ = [
    'GaussianMoments',
    'MomentsError',
    'GAUSS_HERMITE_ORDER',
    'gaussian_expectations',
    'sigmoid_expectations',
    'IntegratorInstabilityError',
    'MomentTrajectory',
    'equilibrium_residual',
    'integrate_moments',
    'integrate_to_stationarity',
    'moment_ode_rhs',
    'LaplaceConvergenceError',
    'laplace_fit',
    'probit_predictive',
    'PosteriorMeanEstimate',
    'importance_posterior_mean',
]
