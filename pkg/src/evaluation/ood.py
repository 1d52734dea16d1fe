"""Out-of-distribution confidence on 2-D two-cluster data.

The sampler posterior is compared with the MAP point estimate (an overconfident
single-particle predictive) and the Laplace probit predictive.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .base import Experiment, ExperimentConfigError
from .predictive import ConfidenceCurve, ood_confidence_curve
from .recovery import method_config, normalize_method
from .synthetic import FeatureMap, grid_points, make_two_clusters
from ..ensemble import Ensemble
from ..meanfield import laplace_fit
from ..models import Dataset, GaussianPrior, LogisticModel
from ..samplers import SamplerFactory, sample_prior_ensemble
from ..utils.artifacts import ArtifactStore, artifact_name
from ..utils.logger import Logger
from ..utils.seeding import SeedStreams


# Lift width and prior scale for which the untrained units dominate the far-field logit variance
OOD_WIDTH = 100
OOD_PRIOR_SCALE = 3.0


@dataclass
class OODResult:
    curves: Dict[str, ConfidenceCurve] = field(default_factory=dict)
    train_accuracy: float = float('nan')
    untrained_units: int = 0


class OODExperiment(Experiment):
    name = "ood"

    def __init__(self, method: str = 'second-order', ensemble_size: int = 200, bins: int = 10,
                 feature_map: str = 'relu', seed: int = 0, num_samples: int = 200,
                 resolution: int = 200, prior_scale: float = OOD_PRIOR_SCALE, dataset_path: Optional[str] = None,
                 step_size: Optional[float] = None, width: int = OOD_WIDTH):
        self.method = normalize_method(method)
        if self.method not in ('homotopy', 'second-order'):
            raise ExperimentConfigError(f"OOD supports homotopy and second-order, got {method}")
        self.ensemble_size = ensemble_size
        self.bins = bins
        self.features = FeatureMap(feature_map, width=width, seed=seed)
        self.seed = seed
        self.num_samples = num_samples
        self.resolution = resolution
        self.prior_scale = prior_scale
        self.dataset_path = dataset_path
        self.step_size = step_size
        self.result: Optional[OODResult] = None
        self.logger = Logger.get_logger()

    def _training_points(self, streams: SeedStreams):
        if self.dataset_path:
            loaded = Dataset.from_csv(Path(self.dataset_path), num_classes=2)
            if loaded.dim != 2:
                raise ExperimentConfigError(f"OOD expects 2-D input points, {self.dataset_path} has D={loaded.dim}")
            return loaded.features, loaded.labels
        return make_two_clusters(self.num_samples, streams.generator(SeedStreams.DATASET))

    def run(self) -> OODResult:
        streams = SeedStreams(self.seed)
        points, labels = self._training_points(streams)
        self.features.fit(points)
        data = Dataset(self.features(points), labels)
        model = LogisticModel(data)
        prior = GaussianPrior.isotropic(data.dim, self.prior_scale)

        config = method_config(self.method, self.step_size, self.seed)
        initial = sample_prior_ensemble(prior, self.ensemble_size,
                                        streams.generator(SeedStreams.INIT_ENSEMBLE, self.ensemble_size))
        posterior = SamplerFactory.create_sampler(self.method, model, prior, config).run(initial).final_ensemble
        laplace = laplace_fit(model, prior)
        map_point = Ensemble(laplace.mean[None, :])

        grid = grid_points(points, self.resolution)
        result = OODResult()
        result.untrained_units = int(self.features.untrained_units(points).size)
        for label, source in ((self.method, posterior), ('map', map_point), ('laplace', laplace)):
            result.curves[label] = ood_confidence_curve(source, points, grid, self.bins, self.features)
        fitted = (posterior.particles @ data.features).mean(axis=0) > 0
        result.train_accuracy = float(np.mean(fitted == (labels == 1)))
        self.logger.info(f"OOD: training accuracy {result.train_accuracy:.3f}, "
                         f"{result.untrained_units} lift units inactive on the training points")
        self.result = result
        return result

    def write(self, store: ArtifactStore) -> List[Path]:
        curves = self.result.curves
        first = next(iter(curves.values()))
        rows = []
        for b, center in enumerate(first.centers):
            row: Dict[str, Any] = {'delta': center, 'count': int(first.counts[b])}
            for label, curve in curves.items():
                row[f'{label}_mean'] = curve.mean[b]
                row[f'{label}_std'] = curve.std[b]
            rows.append(row)
        fields = ['delta', 'count'] + [f'{label}_{stat}' for label in curves for stat in ('mean', 'std')]
        csv_path = store.write_rows(artifact_name(self.name, self.method, self.ensemble_size, self.seed, 'csv'),
                                    fields, rows)
        json_path = store.write_json(artifact_name(self.name, self.method, self.ensemble_size, self.seed, 'json'), {
            'experiment': self.name,
            'feature_map': self.features.kind,
            'bins': self.bins,
            'train_accuracy': self.result.train_accuracy,
            'untrained_units': self.result.untrained_units,
            'curve_file': csv_path.name,
        })
        return [csv_path, json_path]

    def summary_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for label, curve in self.result.curves.items():
            filled = np.flatnonzero(curve.counts)
            rows.append({
                'predictive': label,
                'conf(δ≈0)': f"{curve.mean[filled[0]]:.3f}",
                'conf(max δ)': f"{curve.mean[filled[-1]]:.3f}",
            })
        return rows
