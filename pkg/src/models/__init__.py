from .base import LikelihoodModel, ModelError, LabelError, PriorError
from .dataset import Dataset, GaussianPrior, load_feature_matrix, random_spd_prior
from .logistic import (
    LikelihoodEval,
    LogisticModel,
    cross_entropy,
    evaluate_likelihood,
    grad_loss,
    hessian_loss,
    neg_log_posterior,
    sigmoid,
)
from .multiclass import SoftmaxModel, class_probabilities, softmax_probs
from .factory import ModelFactory

__all__ = [
    'LikelihoodModel',
    'ModelError',
    'LabelError',
    'PriorError',
    'Dataset',
    'GaussianPrior',
    'load_feature_matrix',
    'random_spd_prior',
    'LikelihoodEval',
    'LogisticModel',
    'cross_entropy',
    'evaluate_likelihood',
    'grad_loss',
    'hessian_loss',
    'neg_log_posterior',
    'sigmoid',
    'SoftmaxModel',
    'class_probabilities',
    'softmax_probs',
    'ModelFactory',
]
