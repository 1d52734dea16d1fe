from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .config import ConfigManager, ExperimentConfig
from .ensemble import Ensemble
from .evaluation import (
    EquilibriumCheck,
    EquivalenceCheck,
    Experiment,
    ExperimentConfigError,
    MulticlassDemo,
    OODExperiment,
    RateStudy,
    RecoveryExperiment,
    SweepExperiment,
    make_blobs_multiclass,
    make_two_clusters,
    multiclass_predictive,
    predictive_confidence,
    synthesize_logistic_dataset,
)
from .meanfield import (
    GaussianMoments,
    equilibrium_residual,
    integrate_moments,
    integrate_to_stationarity,
    laplace_fit,
)
from .models import Dataset, GaussianPrior, ModelFactory, load_feature_matrix, random_spd_prior
from .samplers import RunReport, SamplerConfigError, SamplerFactory, initial_moments, sample_prior_ensemble
from .utils import ArtifactStore, Logger, SeedStreams, artifact_name


class ExperimentRunner:
    """Runs one subcommand against an output directory and records its manifest"""

    def __init__(self, out_dir: Path, seed: int = 0):
        self.store = ArtifactStore(out_dir)
        self.seed = seed
        self.streams = SeedStreams(seed)
        self.inputs: List[Path] = []
        self.summary: List[Dict[str, Any]] = []
        self.logger = Logger.get_logger()

    # Inputs

    def load_dataset(self, path: Path) -> Dataset:
        self.inputs.append(Path(path))
        data = Dataset.from_csv(Path(path))
        self.logger.info(f"Loaded {data} from {path}")
        return data

    def resolve_prior(self, dim: int, prior_file: Optional[Path] = None, scale: float = 1.0,
                      random_spd: bool = False) -> GaussianPrior:
        """Prior of the per-class dimension ``dim``: a covariance file, a seeded random SPD matrix, or scale * I"""
        if prior_file is not None:
            self.inputs.append(Path(prior_file))
            prior = GaussianPrior.from_csv(Path(prior_file))
            if prior.dim != dim:
                raise SamplerConfigError(
                    f"Prior file {prior_file} has dimension {prior.dim}, features have dimension {dim}"
                )
            return prior
        if random_spd:
            return random_spd_prior(dim, self.streams.generator(SeedStreams.PRIOR_SPD))
        return GaussianPrior.isotropic(dim, scale)

    # Subcommands

    def synthesize(self, kind: str = 'logistic', dim: int = 20, num_samples: int = 300,
                   num_classes: int = 3) -> List[Path]:
        """Write a synthetic dataset and, for the logistic kind, the reference parameter"""
        rng = self.streams.generator(SeedStreams.DATASET)
        paths = []
        if kind == 'logistic':
            data, theta_ref = synthesize_logistic_dataset(dim, num_samples, rng)
            paths.append(self.store.write_matrix(f"theta_ref_seed{self.seed}.csv",
                                                 [f"theta_{i}" for i in range(dim)], theta_ref[None, :]))
        elif kind == 'two-clusters':
            points, labels = make_two_clusters(num_samples, rng)
            data = Dataset(points, labels)
        elif kind == 'blobs':
            points, labels = make_blobs_multiclass(num_classes, num_samples, rng)
            data = Dataset(points, labels, num_classes=num_classes)
        else:
            raise ExperimentConfigError(f"Unknown dataset kind: {kind}")
        paths.insert(0, data.to_csv(self.store, f"dataset_seed{self.seed}.csv"))
        self.summary.append({'kind': kind, 'D': data.dim, 'N': data.size, 'K': data.num_classes,
                             'label mean': f"{float(np.mean(data.labels)):.3f}"})
        return paths

    def sample(self, data: Dataset, method: str, ensemble_size: int, config, prior: GaussianPrior) -> RunReport:
        """Run one sampler from a prior-drawn ensemble and write ensemble CSV + report JSON"""
        model = ModelFactory.create_model(data)
        prior = ModelFactory.stacked_prior(prior, model)
        start = initial_moments(prior, config) if method == 'second-order' else prior
        initial = sample_prior_ensemble(start, ensemble_size,
                                        self.streams.generator(SeedStreams.INIT_ENSEMBLE, ensemble_size))
        report = SamplerFactory.create_sampler(method, model, prior, config).run(initial)
        stem = Path(artifact_name('sample', method, ensemble_size, self.seed, 'json')).stem
        report.write(self.store, stem)
        if report.flagged:
            self.logger.warning("The run hit its step cap before the stop criterion; see the report")
        last = report.diagnostics[-1] if report.diagnostics else None
        self.summary.append({
            'method': method,
            'J': ensemble_size,
            'steps': report.steps_taken,
            'terminated by': report.terminated_by.value if report.terminated_by else '-',
            'last criterion': f"{last.stop_criterion:.2e}" if last else '-',
            '|mean|': f"{float(np.linalg.norm(report.final_ensemble.mean())):.4f}",
        })
        return report

    def predict(self, features_path: Path, ensemble_path: Optional[Path] = None,
                moments_path: Optional[Path] = None, mode: Optional[str] = None,
                num_classes: Optional[int] = None) -> Path:
        """Per-row predictive probability and confidence for a test feature file"""
        self.inputs.append(Path(features_path))
        features = load_feature_matrix(Path(features_path))
        if (ensemble_path is None) == (moments_path is None):
            raise ExperimentConfigError("Give exactly one of an ensemble file or a moments file")
        if ensemble_path is not None:
            self.inputs.append(Path(ensemble_path))
            posterior = Ensemble.from_csv(Path(ensemble_path))
        else:
            self.inputs.append(Path(moments_path))
            posterior = GaussianMoments.from_json(Path(moments_path))

        if num_classes and num_classes > 2:
            if not isinstance(posterior, Ensemble):
                raise ExperimentConfigError("Multiclass prediction needs an ensemble")
            probs, confidence = multiclass_predictive(posterior, features, num_classes)
            header = [f'p_{k + 1}' for k in range(num_classes)] + ['confidence']
            rows = np.column_stack([probs, confidence])
        else:
            if features.shape[0] != posterior.dim:
                raise ExperimentConfigError(
                    f"Test features have dimension {features.shape[0]}, posterior has {posterior.dim}"
                )
            p, confidence = predictive_confidence(posterior, features, mode)
            header = ['probability', 'confidence']
            rows = np.column_stack([p, confidence])
        path = self.store.write_matrix(f"predictions_seed{self.seed}.csv", header, rows)
        self.summary.append({'points': rows.shape[0], 'mean confidence': f"{float(np.mean(rows[:, -1])):.4f}"})
        return path

    def laplace(self, data: Dataset, prior: GaussianPrior, tol: float = 1e-10, max_iter: int = 100) -> GaussianMoments:
        """MAP estimate and inverse Hessian, written as a moments file"""
        model = ModelFactory.create_model(data)
        moments = laplace_fit(model, ModelFactory.stacked_prior(prior, model), tol=tol, max_iter=max_iter)
        moments.to_json(self.store, f"laplace_seed{self.seed}.json")
        self.summary.append({
            'D': moments.dim,
            '|m_MAP|': f"{float(np.linalg.norm(moments.mean)):.4f}",
            'tr P': f"{float(np.trace(moments.covariance)):.4f}",
        })
        return moments

    def meanfield(self, data: Dataset, prior: GaussianPrior, variant: str = 'second_order', horizon: float = 10.0,
                  step_size: float = 0.01, stationary: bool = False) -> List[Path]:
        """Integrate the moment ODEs from the prior; optionally continue to the stationary point"""
        if not data.is_binary:
            raise ExperimentConfigError("The moment ODEs are defined for binary labels only")
        trajectory = integrate_moments(prior.to_moments(), data, prior, step_size, horizon, variant)
        name = artifact_name('meanfield', variant.replace('_', '-'), None, self.seed, 'csv')
        if variant == 'second_order':
            paths = [trajectory.to_csv(self.store, name, data, prior)]
        else:
            paths = [trajectory.to_csv(self.store, name)]
        final = trajectory.final
        payload: Dict[str, Any] = {'variant': variant, 'horizon': horizon, 'step_size': step_size,
                                   'final': final.to_dict()}
        if variant == 'second_order':
            res_m, res_p = equilibrium_residual(final, data, prior)
            payload.update(residual_mean=res_m, residual_cov=res_p)
        if stationary:
            fixed, time = integrate_to_stationarity(final, data, prior)
            res_m, res_p = equilibrium_residual(fixed, data, prior)
            payload['stationary'] = {'moments': fixed.to_dict(), 'time': horizon + time,
                                     'residual_mean': res_m, 'residual_cov': res_p}
        paths.append(self.store.write_json(Path(name).with_suffix('.json').name, payload))
        row: Dict[str, Any] = {'variant': variant, 'T': horizon}
        if 'residual_mean' in payload:
            row.update({'res_m': f"{payload['residual_mean']:.2e}", 'res_P': f"{payload['residual_cov']:.2e}"})
        self.summary.append(row)
        return paths

    def experiment(self, config: ExperimentConfig) -> Experiment:
        """Build, run and write one experiment recipe"""
        recipe = self.build_experiment(config)
        if config.dataset_path:
            self.inputs.append(Path(config.dataset_path))
        recipe.run()
        recipe.write(self.store)
        self.summary.extend(recipe.summary_rows())
        return recipe

    @staticmethod
    def build_experiment(config: ExperimentConfig) -> Experiment:
        sizes = config.ensemble_sizes
        recipe = config.recipe
        if recipe == 'recovery':
            return RecoveryExperiment(config.method, sizes, config.repeats, config.prior_kind, config.seed,
                                      dim=config.dimension or 20, num_samples=config.num_samples or 300,
                                      step_size=config.step_size, check_step_size=config.check_step_size)
        elif recipe == 'rate':
            return RateStudy(sizes, config.horizon, config.repeats, config.seed,
                             dim=config.dimension or 5, num_samples=config.num_samples or 20,
                             step_size=config.step_size)
        elif recipe == 'ood':
            return OODExperiment(config.method, sizes[0], config.bins, config.feature_map, config.seed,
                                 num_samples=config.num_samples or 200, dataset_path=config.dataset_path,
                                 step_size=config.step_size)
        elif recipe == 'sweep':
            return SweepExperiment(sizes, config.method, config.repeats, config.seed,
                                   dim=config.dimension or 20, num_samples=config.num_samples or 300,
                                   step_size=config.step_size, dataset_path=config.dataset_path)
        elif recipe == 'multiclass-demo':
            return MulticlassDemo(config.num_classes, sizes[0], config.seed,
                                  num_samples=config.num_samples or 300, feature_map=config.feature_map,
                                  step_size=config.step_size)
        elif recipe == 'equilibrium':
            return EquilibriumCheck(sizes[0], config.seed, dim=config.dimension or 5,
                                    num_samples=config.num_samples or 20, step_size=config.step_size)
        elif recipe == 'equivalence':
            return EquivalenceCheck(sizes[0], config.repeats, config.seed, dim=config.dimension or 3,
                                    num_samples=config.num_samples or 10, horizon=config.horizon,
                                    step_size=config.step_size or 0.05)
        else:
            raise ExperimentConfigError(f"Unknown recipe: {recipe}")

    # Bookkeeping

    def finish(self, subcommand: str, config: Dict[str, Any], argv: Sequence[str]) -> Path:
        """Write the manifest of the output directory; call once all artifacts are written"""
        snapshot = dict(config)
        snapshot['argv'] = list(argv)
        return self.store.write_manifest(subcommand, snapshot, self.seed, self.inputs, __version__)

    @staticmethod
    def output_dir(cli_value: Optional[str]) -> Path:
        return ConfigManager.get_output_dir(cli_value)
