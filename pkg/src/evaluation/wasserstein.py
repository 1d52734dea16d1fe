import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .base import ExperimentConfigError


MAX_ASSIGNMENT_SIZE = 200


def _check_pair(first: np.ndarray, second: np.ndarray) -> None:
    if first.ndim != 2 or first.shape != second.shape:
        raise ExperimentConfigError(f"Need two equal-size (J, D) clouds, got {first.shape} and {second.shape}")


def empirical_w2(first: np.ndarray, second: np.ndarray, max_size: int = MAX_ASSIGNMENT_SIZE) -> float:
    """W₂ between two uniform empirical measures of equal size via optimal assignment.

    The assignment solver is cubic in J, hence the size cap.
    """
    first = np.atleast_2d(np.asarray(first, dtype=float))
    second = np.atleast_2d(np.asarray(second, dtype=float))
    _check_pair(first, second)
    if first.shape[0] > max_size:
        raise ExperimentConfigError(f"Exact W2 is limited to J <= {max_size}, got {first.shape[0]}")
    cost = cdist(first, second, metric='sqeuclidean')
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].mean()))


def coupling_distance(first: np.ndarray, second: np.ndarray) -> float:
    """(1/J Σ_j |θ^j - η^j|²)^{1/2} for index-paired particles; an upper bound on W₂"""
    first = np.atleast_2d(np.asarray(first, dtype=float))
    second = np.atleast_2d(np.asarray(second, dtype=float))
    _check_pair(first, second)
    return float(np.sqrt(np.mean(np.sum((first - second) ** 2, axis=1))))
