"""Equilibrium check: the second-order sampler against the stationary point of its moment flow."""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .base import Experiment
from .rate import moment_error
from .synthetic import synthesize_logistic_dataset
from ..config import SecondOrderConfig
from ..config.sampler_config import DEFAULT_SECOND_ORDER_STEP
from ..ensemble import compute_stats
from ..meanfield import GaussianMoments, equilibrium_residual, integrate_to_stationarity
from ..models import GaussianPrior, LogisticModel
from ..samplers import RunReport, SecondOrderSampler, sample_prior_ensemble
from ..utils.artifacts import ArtifactStore, artifact_name
from ..utils.logger import Logger
from ..utils.seeding import SeedStreams


def equilibrium_tolerance(ensemble_size: int, stationary: GaussianMoments) -> float:
    """3 J^{-1/2} (1 + ‖P*‖_F)"""
    return 3.0 / math.sqrt(ensemble_size) * (1.0 + float(np.linalg.norm(stationary.covariance, 'fro')))


@dataclass
class EquilibriumResult:
    stationary: GaussianMoments
    stationary_time: float
    residual_mean: float
    residual_cov: float
    report: RunReport
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance


class EquilibriumCheck(Experiment):
    name = "equilibrium"

    def __init__(self, ensemble_size: int = 400, seed: int = 0, dim: int = 5, num_samples: int = 20,
                 stop_threshold: float = 1e-4, step_size: Optional[float] = None):
        self.ensemble_size = ensemble_size
        self.seed = seed
        self.dim = dim
        self.num_samples = num_samples
        self.stop_threshold = stop_threshold
        self.step_size = step_size or DEFAULT_SECOND_ORDER_STEP
        self.result: Optional[EquilibriumResult] = None
        self.logger = Logger.get_logger()

    def run(self) -> EquilibriumResult:
        streams = SeedStreams(self.seed)
        data, _ = synthesize_logistic_dataset(self.dim, self.num_samples, streams.generator(SeedStreams.DATASET))
        prior = GaussianPrior.isotropic(self.dim)
        stationary, time = integrate_to_stationarity(prior.to_moments(), data, prior)
        res_m, res_p = equilibrium_residual(stationary, data, prior)
        self.logger.info(f"Moment flow stationary at s={time:g} (res_m={res_m:.2e}, res_P={res_p:.2e})")

        config = SecondOrderConfig(step_size=self.step_size, stop_threshold=self.stop_threshold, seed=self.seed)
        initial = sample_prior_ensemble(prior, self.ensemble_size,
                                        streams.generator(SeedStreams.INIT_ENSEMBLE, self.ensemble_size))
        report = SecondOrderSampler(LogisticModel(data), prior, config).run(initial)
        self.result = EquilibriumResult(
            stationary=stationary,
            stationary_time=time,
            residual_mean=res_m,
            residual_cov=res_p,
            report=report,
            error=moment_error(report.final_ensemble.particles, stationary),
            tolerance=equilibrium_tolerance(self.ensemble_size, stationary),
        )
        return self.result

    def write(self, store: ArtifactStore) -> List[Path]:
        result = self.result
        stem = Path(artifact_name(self.name, 'second-order', self.ensemble_size, self.seed, 'csv')).stem
        report_path = result.report.write(store, stem)
        sampled = compute_stats(result.report.final_ensemble)
        json_path = store.write_json(artifact_name(self.name, 'meanfield', None, self.seed, 'json'), {
            'experiment': self.name,
            'stationary': result.stationary.to_dict(),
            'stationary_time': result.stationary_time,
            'residual_mean': result.residual_mean,
            'residual_cov': result.residual_cov,
            'ensemble_mean': sampled.mean,
            'ensemble_covariance': sampled.covariance,
            'error': result.error,
            'tolerance': result.tolerance,
            'passed': result.passed,
        })
        return [report_path, json_path]

    def summary_rows(self) -> List[Dict[str, Any]]:
        result = self.result
        return [{
            'J': self.ensemble_size,
            'stopped by': result.report.terminated_by.value,
            'steps': result.report.steps_taken,
            'res_m / res_P': f"{result.residual_mean:.1e} / {result.residual_cov:.1e}",
            'error': f"{result.error:.4f}",
            'tolerance': f"{result.tolerance:.4f}",
            'passed': 'yes' if result.passed else 'no',
        }]
