"""Known-parameter recovery: ‖posterior ensemble mean - θ_ref‖₂ over repeated experiments.

Each completed repeat also records the distance of the ensemble mean to an
importance-sampling estimate of the exact posterior mean.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .base import Experiment, ExperimentConfigError, FailedRepeatsError
from .synthetic import synthesize_logistic_dataset
from ..config import HomotopyConfig, SecondOrderConfig, StochasticConfig
from ..config.sampler_config import DEFAULT_HOMOTOPY_STEP, DEFAULT_SECOND_ORDER_STEP
from ..meanfield import importance_posterior_mean
from ..meanfield.importance import DEFAULT_DRAWS
from ..models import GaussianPrior, LogisticModel, random_spd_prior
from ..samplers import NumericBlowUpError, SamplerFactory, initial_moments, sample_prior_ensemble
from ..utils.artifacts import ArtifactStore, artifact_name
from ..utils.logger import Logger
from ..utils.seeding import SeedStreams


RECOVERY_METHODS = ('homotopy', 'second-order')
MAX_FAILURE_FRACTION = 0.10


def normalize_method(method: str) -> str:
    return method.replace('_', '-').lower()


@dataclass
class RecoveryResult:
    """Per-repeat ℓ₂ errors for one method and ensemble size; NaN marks a failed repeat"""

    method: str
    ensemble_size: int
    prior_kind: str
    errors: List[float] = field(default_factory=list)
    posterior_errors: List[float] = field(default_factory=list)

    @property
    def completed(self) -> np.ndarray:
        values = np.asarray(self.errors, dtype=float)
        return values[np.isfinite(values)]

    @property
    def failures(self) -> int:
        return len(self.errors) - self.completed.size

    @property
    def mean_error(self) -> float:
        return float(self.completed.mean()) if self.completed.size else math.nan

    @property
    def mean_posterior_error(self) -> float:
        """Mean distance to the importance-sampled posterior mean over completed repeats"""
        values = np.asarray(self.posterior_errors, dtype=float)
        values = values[np.isfinite(values)]
        return float(values.mean()) if values.size else math.nan

    @property
    def std_error(self) -> float:
        """Sample standard deviation of the per-repeat errors"""
        return float(self.completed.std(ddof=1)) if self.completed.size > 1 else 0.0

    @property
    def sem(self) -> float:
        """Standard deviation of the mean"""
        return self.std_error / math.sqrt(self.completed.size) if self.completed.size else math.nan

    def to_dict(self) -> Dict[str, Any]:
        return {
            'method': self.method,
            'J': self.ensemble_size,
            'prior_kind': self.prior_kind,
            'repeats': len(self.errors),
            'failures': self.failures,
            'mean_error': self.mean_error,
            'std_error': self.std_error,
            'sem': self.sem,
            'mean_posterior_error': self.mean_posterior_error,
        }


def make_prior(prior_kind: str, dim: int, rng: np.random.Generator) -> GaussianPrior:
    if prior_kind == 'identity':
        return GaussianPrior.isotropic(dim)
    if prior_kind == 'random_spd':
        return random_spd_prior(dim, rng)
    raise ExperimentConfigError(f"Invalid prior kind: {prior_kind}. Must be 'identity' or 'random_spd'")


def method_config(method: str, step_size: Optional[float] = None, seed: int = 0):
    """Default config of ``method`` with an optional step size override"""
    method = normalize_method(method)
    if method == 'homotopy':
        return HomotopyConfig(step_size=step_size or DEFAULT_HOMOTOPY_STEP, seed=seed)
    if method == 'second-order':
        return SecondOrderConfig(step_size=step_size or DEFAULT_SECOND_ORDER_STEP, seed=seed)
    if method == 'stochastic':
        return StochasticConfig(step_size=step_size or DEFAULT_SECOND_ORDER_STEP, seed=seed)
    raise ExperimentConfigError(f"Unsupported method: {method}")


def recovery_experiment(method: str, ensemble_size: int, repeats: int = 20, prior_kind: str = 'identity',
                        seed: int = 0, dim: int = 20, num_samples: int = 300,
                        step_size: Optional[float] = None,
                        posterior_draws: int = DEFAULT_DRAWS) -> RecoveryResult:
    """Per repeat: fresh dataset, prior and initial ensemble; run the sampler; record ‖m - θ_ref‖₂.

    With ``posterior_draws > 0`` the distance to an importance-sampled
    posterior mean is recorded too.

    Repeats that blow up are recorded as failures; more than 10% failures
    raise FailedRepeatsError.
    """
    method = normalize_method(method)
    if method not in RECOVERY_METHODS:
        raise ExperimentConfigError(f"Recovery supports {', '.join(RECOVERY_METHODS)}, got {method}")
    if ensemble_size < 2:
        raise ExperimentConfigError(f"Recovery needs J >= 2, got {ensemble_size}")
    if repeats < 1:
        raise ExperimentConfigError("repeats must be at least 1")

    logger = Logger.get_logger()
    streams = SeedStreams(seed)
    result = RecoveryResult(method=method, ensemble_size=ensemble_size, prior_kind=prior_kind)

    for r in range(repeats):
        data, theta_ref = synthesize_logistic_dataset(dim, num_samples, streams.generator(SeedStreams.DATASET, r))
        prior = make_prior(prior_kind, dim, streams.generator(SeedStreams.PRIOR_SPD, r))
        config = method_config(method, step_size, streams.child_seed(method, ensemble_size, r))
        start = initial_moments(prior, config) if method == 'second-order' else prior
        initial = sample_prior_ensemble(start, ensemble_size,
                                        streams.generator(SeedStreams.INIT_ENSEMBLE, ensemble_size, r))
        sampler = SamplerFactory.create_sampler(method, LogisticModel(data), prior, config)
        try:
            report = sampler.run(initial)
        except NumericBlowUpError as e:
            logger.warning(f"Repeat {r} ({method}, J={ensemble_size}) failed: {e}")
            result.errors.append(math.nan)
            result.posterior_errors.append(math.nan)
            continue
        ensemble_mean = report.final_ensemble.mean()
        error = float(np.linalg.norm(ensemble_mean - theta_ref))
        result.errors.append(error)
        posterior_error = math.nan
        if posterior_draws > 0:
            oracle = importance_posterior_mean(data, prior, streams.generator(SeedStreams.POSTERIOR_ORACLE, r),
                                               num_draws=posterior_draws)
            posterior_error = float(np.linalg.norm(ensemble_mean - oracle.mean))
        result.posterior_errors.append(posterior_error)
        logger.info(f"Repeat {r + 1}/{repeats} ({method}, J={ensemble_size}): error {error:.4f}, "
                    f"to posterior mean {posterior_error:.4f}")

    if result.failures > MAX_FAILURE_FRACTION * repeats:
        raise FailedRepeatsError(
            f"{result.failures} of {repeats} repeats failed for {method} at J={ensemble_size}",
            result.failures, repeats,
        )
    return result


class RecoveryExperiment(Experiment):
    """Recovery table over several ensemble sizes, optionally with a step-halving check"""

    name = "recovery"

    def __init__(self, method: str, ensemble_sizes: List[int], repeats: int, prior_kind: str = 'identity',
                 seed: int = 0, dim: int = 20, num_samples: int = 300, step_size: Optional[float] = None,
                 check_step_size: bool = False, posterior_draws: int = DEFAULT_DRAWS):
        self.method = normalize_method(method)
        self.ensemble_sizes = list(ensemble_sizes)
        self.repeats = repeats
        self.prior_kind = prior_kind
        self.seed = seed
        self.dim = dim
        self.num_samples = num_samples
        self.step_size = step_size
        self.check_step_size = check_step_size
        self.posterior_draws = posterior_draws
        self.results: List[RecoveryResult] = []
        self.halved: List[RecoveryResult] = []

    def _effective_step(self) -> float:
        if self.step_size is not None:
            return self.step_size
        return DEFAULT_HOMOTOPY_STEP if self.method == 'homotopy' else DEFAULT_SECOND_ORDER_STEP

    def run(self) -> List[RecoveryResult]:
        kwargs = dict(repeats=self.repeats, prior_kind=self.prior_kind, seed=self.seed,
                      dim=self.dim, num_samples=self.num_samples, posterior_draws=self.posterior_draws)
        self.results = [
            recovery_experiment(self.method, j, step_size=self._effective_step(), **kwargs)
            for j in self.ensemble_sizes
        ]
        if self.check_step_size:
            self.halved = [
                recovery_experiment(self.method, j, step_size=self._effective_step() / 2, **kwargs)
                for j in self.ensemble_sizes
            ]
        return self.results

    def write(self, store: ArtifactStore) -> List[Path]:
        paths = []
        for index, result in enumerate(self.results):
            rows = [{'repeat': r, 'error': e, 'posterior_error': p, 'failed': int(not math.isfinite(e))}
                    for r, (e, p) in enumerate(zip(result.errors, result.posterior_errors))]
            if self.halved:
                for row, e in zip(rows, self.halved[index].errors):
                    row['error_half_step'] = e
            fields = ['repeat', 'error', 'posterior_error', 'failed'] + (['error_half_step'] if self.halved else [])
            paths.append(store.write_rows(
                artifact_name(self.name, self.method, result.ensemble_size, self.seed, 'csv'), fields, rows))
        payload = {
            'experiment': self.name,
            'dimension': self.dim,
            'num_samples': self.num_samples,
            'step_size': self._effective_step(),
            'results': [r.to_dict() for r in self.results],
            'half_step_results': [r.to_dict() for r in self.halved],
        }
        paths.append(store.write_json(artifact_name(self.name, self.method, None, self.seed, 'json'), payload))
        return paths

    def summary_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for index, result in enumerate(self.results):
            row = {
                'method': result.method,
                'J': result.ensemble_size,
                'prior': result.prior_kind,
                'l2 error': f"{result.mean_error:.3f} ± {result.sem:.3f}",
                'to posterior mean': f"{result.mean_posterior_error:.3f}",
                'failed': result.failures,
            }
            if self.halved:
                row['Δs/2 diff'] = f"{self.halved[index].mean_error - result.mean_error:+.3f}"
            rows.append(row)
        return rows
