from .base import Experiment, ExperimentConfigError, ExperimentError, FailedRepeatsError
from .synthetic import (
    FeatureMap,
    grid_points,
    make_blobs_multiclass,
    make_two_clusters,
    radial_test_points,
    synthesize_logistic_dataset,
)
from .wasserstein import coupling_distance, empirical_w2
from .recovery import RecoveryExperiment, RecoveryResult, make_prior, method_config, recovery_experiment
from .rate import RateFit, RateStudy, fit_rate, meanfield_rate_study, moment_error
from .predictive import (
    ConfidenceCurve,
    bin_confidence,
    multiclass_predictive,
    nearest_distance,
    ood_confidence_curve,
    predictive_confidence,
    predictive_probability,
)
from .ood import OODExperiment
from .sweep import SweepExperiment, ensemble_size_sweep
from .multiclass_demo import MulticlassDemo
from .equilibrium import EquilibriumCheck, equilibrium_tolerance
from .equivalence import EquivalenceCheck

__all__ = [
    'Experiment',
    'ExperimentConfigError',
    'ExperimentError',
    'FailedRepeatsError',
    'FeatureMap',
    'grid_points',
    'make_blobs_multiclass',
    'make_two_clusters',
    'radial_test_points',
    'synthesize_logistic_dataset',
    'coupling_distance',
    'empirical_w2',
    'RecoveryExperiment',
    'RecoveryResult',
    'make_prior',
    'method_config',
    'recovery_experiment',
    'RateFit',
    'RateStudy',
    'fit_rate',
    'meanfield_rate_study',
    'moment_error',
    'ConfidenceCurve',
    'bin_confidence',
    'multiclass_predictive',
    'nearest_distance',
    'ood_confidence_curve',
    'predictive_confidence',
    'predictive_probability',
    'OODExperiment',
    'SweepExperiment',
    'ensemble_size_sweep',
    'MulticlassDemo',
    'EquilibriumCheck',
    'equilibrium_tolerance',
    'EquivalenceCheck',
]
