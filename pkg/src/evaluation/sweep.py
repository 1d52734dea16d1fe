"""Ensemble-size sweep on one fixed dataset.

Every J runs the same sampler on the same data; only the initial ensemble
(and the noise of the stochastic sampler) changes, through seeds nested under
(method, J, repeat). Per J the sweep keeps the recovery error of each repeat
and the repeat-averaged confidence at every test point, ready for plotting.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from scipy import stats

from .base import Experiment, ExperimentConfigError
from .predictive import predictive_confidence
from .recovery import method_config, normalize_method
from .synthetic import radial_test_points, synthesize_logistic_dataset
from ..models import Dataset, GaussianPrior, LogisticModel
from ..samplers import NumericBlowUpError, SamplerFactory, initial_moments, sample_prior_ensemble
from ..utils.artifacts import ArtifactStore, artifact_name
from ..utils.logger import Logger
from ..utils.seeding import SeedStreams


DEFAULT_SWEEP_SIZES = (30, 50, 100, 200, 300)


@dataclass
class SweepPoint:
    """Outcome of one ensemble size"""

    ensemble_size: int
    low_rank: bool
    errors: List[float] = field(default_factory=list)
    confidence: Optional[np.ndarray] = None  # repeat-averaged, one entry per test point

    @property
    def mean_error(self) -> float:
        values = np.asarray(self.errors, dtype=float)
        values = values[np.isfinite(values)]
        return float(values.mean()) if values.size else math.nan


@dataclass
class SweepResult:
    method: str
    points: List[SweepPoint]
    test_features: np.ndarray
    spearman_rho: float = math.nan
    spearman_pvalue: float = math.nan


def ensemble_size_sweep(ensemble_sizes: List[int], method: str = 'second-order', data: Optional[Dataset] = None,
                        theta_ref: Optional[np.ndarray] = None, seed: int = 0, repeats: int = 5,
                        test_features: Optional[np.ndarray] = None, prior: Optional[GaussianPrior] = None,
                        step_size: Optional[float] = None, dim: int = 20, num_samples: int = 300) -> SweepResult:
    """Run ``method`` for every J in ``ensemble_sizes`` on one dataset.

    Without ``data`` a known-parameter dataset is synthesized from the
    ``dataset`` stream, which also supplies ``theta_ref``. Without
    ``test_features`` the confidence field is evaluated on points at growing
    radii around the training centroid. The Spearman correlation between J and
    the repeat-averaged error is negative when larger ensembles recover
    ``theta_ref`` better.
    """
    method = normalize_method(method)
    if not ensemble_sizes:
        raise ExperimentConfigError("The sweep needs at least one ensemble size")
    if any(j < 1 for j in ensemble_sizes):
        raise ExperimentConfigError(f"Ensemble sizes must be positive, got {ensemble_sizes}")
    if repeats < 1:
        raise ExperimentConfigError("repeats must be at least 1")

    logger = Logger.get_logger()
    streams = SeedStreams(seed)
    if data is None:
        data, theta_ref = synthesize_logistic_dataset(dim, num_samples, streams.generator(SeedStreams.DATASET))
    prior = prior or GaussianPrior.isotropic(data.dim)
    if test_features is None:
        test_features = radial_test_points(data.features, np.linspace(0.0, 3.0, 7), 20,
                                           streams.generator("test-points"))
    model = LogisticModel(data)

    points = []
    for j in ensemble_sizes:
        point = SweepPoint(ensemble_size=j, low_rank=j <= data.dim)
        if point.low_rank:
            logger.warning(f"J={j} <= D={data.dim}: the ensemble spans at most a {j - 1}-dimensional subspace")
        fields = []
        for r in range(repeats):
            config = method_config(method, step_size, streams.child_seed(method, j, r))
            start = initial_moments(prior, config) if method == 'second-order' else prior
            initial = sample_prior_ensemble(start, j, streams.generator(SeedStreams.INIT_ENSEMBLE, j, r))
            sampler = SamplerFactory.create_sampler(method, model, prior, config)
            try:
                posterior = sampler.run(initial).final_ensemble
            except NumericBlowUpError as e:
                logger.warning(f"Sweep J={j}, repeat {r} failed: {e}")
                point.errors.append(math.nan)
                continue
            if theta_ref is not None:
                point.errors.append(float(np.linalg.norm(posterior.mean() - theta_ref)))
            fields.append(predictive_confidence(posterior, test_features)[1])
        if fields:
            point.confidence = np.mean(fields, axis=0)
        logger.info(f"Sweep J={j}: mean error {point.mean_error:.4f}")
        points.append(point)

    result = SweepResult(method=method, points=points, test_features=test_features)
    means = [p.mean_error for p in points]
    if theta_ref is not None and len(points) > 1 and all(math.isfinite(m) for m in means):
        rho, pvalue = stats.spearmanr([p.ensemble_size for p in points], means)
        result.spearman_rho, result.spearman_pvalue = float(rho), float(pvalue)
    return result


class SweepExperiment(Experiment):
    name = "sweep"

    def __init__(self, ensemble_sizes: List[int] = DEFAULT_SWEEP_SIZES, method: str = 'second-order', repeats: int = 5,
                 seed: int = 0, dim: int = 20, num_samples: int = 300, step_size: Optional[float] = None,
                 dataset_path: Optional[str] = None):
        self.ensemble_sizes = list(ensemble_sizes)
        self.method = normalize_method(method)
        self.repeats = repeats
        self.seed = seed
        self.dim = dim
        self.num_samples = num_samples
        self.step_size = step_size
        self.dataset_path = dataset_path
        self.result: Optional[SweepResult] = None

    def run(self) -> SweepResult:
        data = Dataset.from_csv(Path(self.dataset_path), num_classes=2) if self.dataset_path else None
        self.result = ensemble_size_sweep(self.ensemble_sizes, self.method, data=data, seed=self.seed,
                                          repeats=self.repeats, step_size=self.step_size,
                                          dim=self.dim, num_samples=self.num_samples)
        return self.result

    def write(self, store: ArtifactStore) -> List[Path]:
        result = self.result
        paths = []
        for point in result.points:
            if point.confidence is None:
                continue
            columns = [f"phi_{i}" for i in range(result.test_features.shape[0])] + ['confidence']
            rows = np.column_stack([result.test_features.T, point.confidence])
            paths.append(store.write_matrix(
                artifact_name(self.name, self.method, point.ensemble_size, self.seed, 'csv'), columns, rows))
        paths.append(store.write_json(artifact_name(self.name, self.method, None, self.seed, 'json'), {
            'experiment': self.name,
            'repeats': self.repeats,
            'spearman_rho': result.spearman_rho,
            'spearman_pvalue': result.spearman_pvalue,
            'points': [
                {'J': p.ensemble_size, 'low_rank': p.low_rank, 'errors': p.errors, 'mean_error': p.mean_error}
                for p in result.points
            ],
        }))
        return paths

    def summary_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for point in self.result.points:
            rows.append({
                'J': point.ensemble_size,
                'l2 error': f"{point.mean_error:.3f}",
                'mean conf': f"{float(np.mean(point.confidence)):.3f}" if point.confidence is not None else '-',
                'low rank': 'yes' if point.low_rank else '',
            })
        return rows
