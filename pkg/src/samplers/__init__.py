from .base import (
    NumericBlowUpError,
    RunReport,
    Sampler,
    SamplerConfigError,
    SamplerError,
    SamplerSolveError,
    StepDiagnostics,
    TerminatedBy,
    spectral_norm,
)
from .kernels import likelihood_step, prior_relax_step, taming_matrix
from .homotopy import HomotopySampler, homotopy_step, run_homotopy
from .second_order import SecondOrderSampler, run_second_order, second_order_half_step
from .stochastic import StochasticSampler, covariance_sqrt, run_stochastic_second_order
from .initial import initial_moments, sample_prior_ensemble
from .factory import SamplerFactory

__all__ = [
    'NumericBlowUpError',
    'RunReport',
    'Sampler',
    'SamplerConfigError',
    'SamplerError',
    'SamplerSolveError',
    'StepDiagnostics',
    'TerminatedBy',
    'spectral_norm',
    'likelihood_step',
    'prior_relax_step',
    'taming_matrix',
    'HomotopySampler',
    'homotopy_step',
    'run_homotopy',
    'SecondOrderSampler',
    'run_second_order',
    'second_order_half_step',
    'StochasticSampler',
    'covariance_sqrt',
    'run_stochastic_second_order',
    'initial_moments',
    'sample_prior_ensemble',
    'SamplerFactory',
]
