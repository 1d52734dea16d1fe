"""K-class softmax demo on 2-D blobs, sampled with the second-order sampler on the stacked parameter."""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .base import Experiment, ExperimentConfigError
from .predictive import multiclass_predictive, nearest_distance
from .recovery import method_config
from .synthetic import FeatureMap, grid_points, make_blobs_multiclass
from ..ensemble import Ensemble
from ..models import Dataset, GaussianPrior, ModelFactory, SoftmaxModel
from ..samplers import SamplerFactory, sample_prior_ensemble
from ..utils.artifacts import ArtifactStore, artifact_name
from ..utils.logger import Logger
from ..utils.seeding import SeedStreams


@dataclass
class MulticlassDemoResult:
    posterior: Ensemble
    grid: np.ndarray  # 2 x M raw grid points
    distance: np.ndarray
    probabilities: np.ndarray  # M x K
    confidence: np.ndarray
    train_accuracy: float


class MulticlassDemo(Experiment):
    name = "multiclass-demo"

    def __init__(self, num_classes: int = 3, ensemble_size: int = 100, seed: int = 0, num_samples: int = 300,
                 feature_map: str = 'linear', resolution: int = 60, step_size: Optional[float] = None):
        if num_classes < 3:
            raise ExperimentConfigError(f"The multiclass demo needs K >= 3, got {num_classes}; use ood for K=2")
        self.num_classes = num_classes
        self.ensemble_size = ensemble_size
        self.seed = seed
        self.num_samples = num_samples
        self.features = FeatureMap(feature_map, seed=seed)
        self.resolution = resolution
        self.step_size = step_size
        self.result: Optional[MulticlassDemoResult] = None
        self.logger = Logger.get_logger()

    def run(self) -> MulticlassDemoResult:
        streams = SeedStreams(self.seed)
        points, labels = make_blobs_multiclass(self.num_classes, self.num_samples,
                                               streams.generator(SeedStreams.DATASET))
        self.features.fit(points)
        data = Dataset(self.features(points), labels, num_classes=self.num_classes)
        model = SoftmaxModel(data)
        prior = ModelFactory.stacked_prior(GaussianPrior.isotropic(data.dim), model)
        config = method_config('second-order', self.step_size, self.seed)
        initial = sample_prior_ensemble(prior, self.ensemble_size,
                                        streams.generator(SeedStreams.INIT_ENSEMBLE, self.ensemble_size))
        report = SamplerFactory.create_sampler('second-order', model, prior, config).run(initial)
        posterior = report.final_ensemble
        self.logger.info(f"Multiclass demo: sampler stopped after {report.steps_taken} steps ({report.terminated_by.value})")

        fitted, _ = multiclass_predictive(posterior, data.features, self.num_classes)
        accuracy = float(np.mean(fitted.argmax(axis=1) + 1 == labels))
        grid = grid_points(points, self.resolution)
        probs, confidence = multiclass_predictive(posterior, self.features(grid), self.num_classes)
        self.result = MulticlassDemoResult(
            posterior=posterior,
            grid=grid,
            distance=nearest_distance(grid, points),
            probabilities=probs,
            confidence=confidence,
            train_accuracy=accuracy,
        )
        self.logger.info(f"Multiclass demo: training accuracy {accuracy:.3f}")
        return self.result

    def write(self, store: ArtifactStore) -> List[Path]:
        result = self.result
        columns = ['x', 'y', 'delta'] + [f'p_{k + 1}' for k in range(self.num_classes)] + ['confidence']
        rows = np.column_stack([result.grid.T, result.distance, result.probabilities, result.confidence])
        grid_path = store.write_matrix(
            artifact_name(self.name, 'second-order', self.ensemble_size, self.seed, 'csv'), columns, rows)
        ensemble_path = result.posterior.to_csv(
            store, artifact_name(f'{self.name}-ensemble', 'second-order', self.ensemble_size, self.seed, 'csv'))
        json_path = store.write_json(artifact_name(self.name, 'second-order', self.ensemble_size, self.seed, 'json'), {
            'experiment': self.name,
            'num_classes': self.num_classes,
            'feature_map': self.features.kind,
            'train_accuracy': result.train_accuracy,
            'grid_file': grid_path.name,
            'ensemble_file': ensemble_path.name,
        })
        return [grid_path, ensemble_path, json_path]

    def summary_rows(self) -> List[Dict[str, Any]]:
        result = self.result
        return [{
            'K': self.num_classes,
            'J': self.ensemble_size,
            'train acc': f"{result.train_accuracy:.3f}",
            'min conf': f"{result.confidence.min():.3f}",
            'max conf': f"{result.confidence.max():.3f}",
        }]
