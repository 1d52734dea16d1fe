"""Deterministic against stochastic second-order dynamics.

Replacing the Brownian term P^{1/2} dW by the spread-restoring drift leaves the
Gaussian mean-field law unchanged, so both samplers, started from the same
ensemble, should end at the same moments up to Monte-Carlo error.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .base import Experiment, ExperimentConfigError
from .synthetic import synthesize_logistic_dataset
from ..config import SecondOrderConfig, StochasticConfig
from ..ensemble import compute_stats
from ..meanfield import GaussianMoments, integrate_moments
from ..models import GaussianPrior, LogisticModel
from ..samplers import SecondOrderSampler, StochasticSampler, sample_prior_ensemble
from ..utils.artifacts import ArtifactStore, artifact_name
from ..utils.logger import Logger
from ..utils.seeding import SeedStreams


MEAN_TOLERANCE = 0.1
COV_TOLERANCE = 0.15


@dataclass
class EquivalenceResult:
    mean_field: GaussianMoments
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def average(self, key: str) -> float:
        return float(np.mean([row[key] for row in self.rows]))

    @property
    def passed(self) -> bool:
        return self.average('mean_diff') <= MEAN_TOLERANCE and self.average('cov_diff') <= COV_TOLERANCE


class EquivalenceCheck(Experiment):
    name = "equivalence"

    def __init__(self, ensemble_size: int = 2000, repeats: int = 10, seed: int = 0, dim: int = 3,
                 num_samples: int = 10, horizon: float = 10.0, step_size: float = 0.05):
        if ensemble_size < 2:
            raise ExperimentConfigError("The equivalence check needs J >= 2")
        self.ensemble_size = ensemble_size
        self.repeats = repeats
        self.seed = seed
        self.dim = dim
        self.num_samples = num_samples
        self.horizon = horizon
        self.step_size = step_size
        self.result: Optional[EquivalenceResult] = None
        self.logger = Logger.get_logger()

    def run(self) -> EquivalenceResult:
        streams = SeedStreams(self.seed)
        data, _ = synthesize_logistic_dataset(self.dim, self.num_samples, streams.generator(SeedStreams.DATASET))
        prior = GaussianPrior.isotropic(self.dim)
        model = LogisticModel(data)
        steps = max(1, int(round(self.horizon / self.step_size)))
        mean_field = integrate_moments(prior.to_moments(), data, prior, self.step_size, self.horizon).final
        deterministic = SecondOrderSampler(model, prior, SecondOrderConfig(step_size=self.step_size, seed=self.seed))

        result = EquivalenceResult(mean_field=mean_field)
        j = self.ensemble_size
        for r in range(self.repeats):
            initial = sample_prior_ensemble(prior, j, streams.generator(SeedStreams.INIT_ENSEMBLE, j, r))
            config = StochasticConfig(step_size=self.step_size, steps=steps,
                                      seed=streams.child_seed('stochastic', j, r))
            det = compute_stats(deterministic.run(initial, fixed_steps=steps).final_ensemble)
            sto = compute_stats(StochasticSampler(model, prior, config).run(initial).final_ensemble)
            row = {
                'repeat': r,
                'mean_diff': float(np.linalg.norm(det.mean - sto.mean)),
                'cov_diff': float(np.linalg.norm(det.covariance - sto.covariance, 'fro')),
                'deterministic_vs_meanfield': float(np.linalg.norm(det.mean - mean_field.mean)
                                                    + np.linalg.norm(det.covariance - mean_field.covariance, 'fro')),
                'stochastic_vs_meanfield': float(np.linalg.norm(sto.mean - mean_field.mean)
                                                 + np.linalg.norm(sto.covariance - mean_field.covariance, 'fro')),
            }
            result.rows.append(row)
            self.logger.info(f"Equivalence repeat {r + 1}/{self.repeats}: "
                             f"mean diff {row['mean_diff']:.4f}, cov diff {row['cov_diff']:.4f}")
        self.result = result
        return result

    def write(self, store: ArtifactStore) -> List[Path]:
        result = self.result
        fields = ['repeat', 'mean_diff', 'cov_diff', 'deterministic_vs_meanfield', 'stochastic_vs_meanfield']
        csv_path = store.write_rows(artifact_name(self.name, 'second-order', self.ensemble_size, self.seed, 'csv'),
                                    fields, result.rows)
        json_path = store.write_json(artifact_name(self.name, 'second-order', self.ensemble_size, self.seed, 'json'), {
            'experiment': self.name,
            'horizon': self.horizon,
            'step_size': self.step_size,
            'mean_field': result.mean_field.to_dict(),
            'mean_diff': result.average('mean_diff'),
            'cov_diff': result.average('cov_diff'),
            'mean_tolerance': MEAN_TOLERANCE,
            'cov_tolerance': COV_TOLERANCE,
            'passed': result.passed,
        })
        return [csv_path, json_path]

    def summary_rows(self) -> List[Dict[str, Any]]:
        result = self.result
        return [{
            'J': self.ensemble_size,
            'repeats': len(result.rows),
            'mean diff': f"{result.average('mean_diff'):.4f} (≤ {MEAN_TOLERANCE})",
            'cov diff': f"{result.average('cov_diff'):.4f} (≤ {COV_TOLERANCE})",
            'passed': 'yes' if result.passed else 'no',
        }]
