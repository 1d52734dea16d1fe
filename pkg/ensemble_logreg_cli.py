#!/usr/bin/env python3
"""
Ensemble Logistic Regression CLI
Command line interface for the interacting-particle samplers and their experiments
"""

import argparse
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from src import __version__
from src.config import ConfigManager, ExperimentConfig
from src.config.experiment_config import METHODS, PRIOR_KINDS, RECIPES
from src.config.sampler_config import STOP_NORMS, TAMING_FORMS
from src.exceptions import NumericError, StructuralError
from src.experiment_runner import ExperimentRunner
from src.samplers import SamplerFactory
from src.utils import Logger


EXIT_USAGE = 2
EXIT_STRUCTURAL = 3
EXIT_NUMERIC = 4
EXIT_IO = 5
EXIT_INTERRUPTED = 130


def positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}") from None
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}")
    return number


def positive_float(value: str) -> float:
    try:
        number = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value!r}") from None
    if not number > 0 or not math.isfinite(number):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value!r}")
    return number


def nonnegative_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value!r}") from None
    if number < 0 or number >= 2 ** 64:
        raise argparse.ArgumentTypeError(f"expected a 64-bit non-negative integer, got {value!r}")
    return number


def size_list(value: str) -> List[int]:
    """Comma-separated ensemble sizes, e.g. 50,100,200"""
    return [positive_int(part.strip()) for part in value.split(',') if part.strip()]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="Output directory (default: $ENSEMBLE_LOGREG_OUT or ./runs)")
    parser.add_argument("--seed", type=nonnegative_int, default=0, help="64-bit master seed (default: 0)")


def _add_prior(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group('Prior Options')
    exclusive = group.add_mutually_exclusive_group()
    exclusive.add_argument("--prior-file", type=Path, help="CSV with the D x D prior covariance (zero mean)")
    exclusive.add_argument("--prior-random-spd", action="store_true",
                           help="Random SPD prior covariance drawn from the prior-spd stream")
    group.add_argument("--prior-scale", type=positive_float, default=1.0,
                       help="Scale of the isotropic prior covariance (default: 1.0)")


def _add_sampler(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group('Sampler Options')
    group.add_argument("--method", choices=METHODS, default='second-order', help="Sampler (default: second-order)")
    group.add_argument("--J", type=positive_int, default=100, help="Ensemble size (default: 100)")
    group.add_argument("--dt", type=positive_float, help="Step size Δs (default: 1e-3 homotopy, 0.1 otherwise)")
    group.add_argument("--steps", type=positive_int,
                       help="Homotopy: step count K with Δs·K = 1; stochastic: number of steps")
    group.add_argument("--eps", type=positive_float, default=1e-4,
                       help="Second-order stop threshold on the relative covariance change (default: 1e-4)")
    group.add_argument("--max-steps", type=positive_int, help="Second-order step cap (default: ceil(30 / Δs))")
    group.add_argument("--diagonal-inverse", action="store_true",
                       help="Keep only the diagonal of the taming and prior matrices")
    group.add_argument("--taming-form", choices=TAMING_FORMS, default='consistent',
                       help="Taming matrix form (default: consistent)")
    group.add_argument("--stop-norm", choices=STOP_NORMS, default='frobenius',
                       help="Matrix norm of the stop criterion (default: frobenius)")
    group.add_argument("--init-mean-offset", type=float, default=0.0,
                       help="Second-order initial mean offset added to the prior mean (default: 0)")
    group.add_argument("--init-cov-scale", type=positive_float, default=1.0,
                       help="Second-order initial covariance as a multiple of the prior's (default: 1)")


def create_argument_parser() -> argparse.ArgumentParser:
    """Create and configure the argument parser"""
    parser = argparse.ArgumentParser(
        prog="ensemble-logreg",
        description="Gradient-free interacting-particle samplers for Bayesian logistic regression",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Synthetic data with D=20, N=300
  %(prog)s synthesize --out runs/data

  # Deterministic second-order sampler
  %(prog)s sample --data runs/data/dataset_seed0.csv --method second-order --dt 0.1 --eps 1e-4

  # Homotopy sampler, Δs·K = 1
  %(prog)s sample --data runs/data/dataset_seed0.csv --method homotopy --dt 1e-3 --steps 1000

  # Recovery table
  %(prog)s experiment recovery --method second-order --J 100 --repeats 20

  # Convergence rate in J
  %(prog)s experiment rate --J 50,100,200,400,800

  # Replay a previous run into a fresh directory
  %(prog)s --manifest runs/data/manifest.json --manifest-out runs/replay
"""
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    other_group = parser.add_argument_group('Other Options')
    other_group.add_argument("--debug", action="store_true", help="Enable debug logging")
    other_group.add_argument("--check-config", action="store_true", help="Check configuration and exit")
    other_group.add_argument("--manifest", type=Path, help="Replay the command recorded in a run manifest")
    other_group.add_argument("--manifest-out", help="Output directory for a replayed run")

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")

    synth = subparsers.add_parser("synthesize", help="Write a synthetic dataset")
    _add_common(synth)
    synth.add_argument("--kind", choices=('logistic', 'two-clusters', 'blobs'), default='logistic',
                       help="Known-parameter logistic data, 2-D two clusters, or 2-D K blobs (default: logistic)")
    synth.add_argument("--D", type=positive_int, default=20, help="Feature dimension (default: 20)")
    synth.add_argument("--N", type=positive_int, default=300, help="Number of samples (default: 300)")
    synth.add_argument("--classes", type=positive_int, default=3, help="Classes for --kind blobs (default: 3)")

    sample = subparsers.add_parser("sample", help="Run a sampler on a dataset file")
    _add_common(sample)
    sample.add_argument("--data", type=Path, required=True, help="Dataset CSV (features then label column)")
    _add_sampler(sample)
    _add_prior(sample)

    predict = subparsers.add_parser("predict", help="Predictive probabilities for test features")
    _add_common(predict)
    predict.add_argument("--features", type=Path, required=True, help="Test features CSV (one point per row)")
    source = predict.add_mutually_exclusive_group(required=True)
    source.add_argument("--ensemble", type=Path, help="Posterior ensemble CSV")
    source.add_argument("--moments", type=Path, help="Gaussian moments JSON (e.g. laplace output)")
    predict.add_argument("--mode", choices=('ensemble_avg', 'probit'),
                         help="Predictive rule (default: by input kind)")
    predict.add_argument("--classes", type=positive_int, help="Number of classes for a multiclass ensemble")

    laplace = subparsers.add_parser("laplace", help="Laplace approximation around the MAP estimate")
    _add_common(laplace)
    laplace.add_argument("--data", type=Path, required=True, help="Dataset CSV")
    laplace.add_argument("--tol", type=positive_float, default=1e-10, help="Newton gradient tolerance")
    laplace.add_argument("--max-iter", type=positive_int, default=100, help="Newton iteration cap")
    _add_prior(laplace)

    experiment = subparsers.add_parser("experiment", help="Run an experiment recipe")
    _add_common(experiment)
    experiment.add_argument("recipe", choices=RECIPES, help="Recipe to run")
    experiment.add_argument("--method", choices=METHODS, default='second-order', help="Sampler (default: second-order)")
    experiment.add_argument("--J", type=size_list, help="Comma-separated ensemble sizes (default: per recipe)")
    experiment.add_argument("--repeats", type=positive_int, help="Repeats per ensemble size (default: per recipe)")
    experiment.add_argument("--full", action="store_true", help="Use 100 repeats")
    experiment.add_argument("--prior-kind", choices=PRIOR_KINDS, default='identity', help="Recovery prior")
    experiment.add_argument("--D", type=positive_int, help="Feature dimension (default: per recipe)")
    experiment.add_argument("--N", type=positive_int, help="Number of samples (default: per recipe)")
    experiment.add_argument("--T", type=positive_float, default=10.0, help="Horizon for rate/equivalence")
    experiment.add_argument("--dt", type=positive_float, help="Step size override")
    experiment.add_argument("--check-dt", action="store_true", help="Recovery: re-run at Δs/2 and report")
    experiment.add_argument("--bins", type=positive_int, default=10, help="OOD distance bins (default: 10)")
    experiment.add_argument("--classes", type=positive_int, default=3, help="Multiclass demo K (default: 3)")
    experiment.add_argument("--features", choices=('linear', 'relu'),
                            help="Feature map of 2-D recipes (default: relu for ood, linear otherwise)")
    experiment.add_argument("--dataset", help="Dataset CSV for ood or sweep instead of synthetic data")

    meanfield = subparsers.add_parser("meanfield", help="Integrate the mean-field moment ODEs")
    _add_common(meanfield)
    meanfield.add_argument("--data", type=Path, required=True, help="Binary dataset CSV")
    meanfield.add_argument("--variant", choices=('second_order', 'homotopy'), default='second_order')
    meanfield.add_argument("--T", type=positive_float, help="Horizon (default: 10, 1 for homotopy)")
    meanfield.add_argument("--dt", type=positive_float, default=0.01, help="RK4 step (default: 0.01)")
    meanfield.add_argument("--stationary", action="store_true",
                           help="Continue to the stationary point and report its residuals")
    _add_prior(meanfield)

    return parser


def check_configuration() -> None:
    """Check and print configuration status"""
    print("Ensemble Logistic Regression Configuration Check")
    print("=" * 48)

    ConfigManager.print_environment_status()

    missing = [name for name, version in ConfigManager.package_versions().items()
               if version is None and name in ConfigManager.STACK]
    if missing:
        print(f"ERROR: Missing runtime packages: {', '.join(missing)}")
        sys.exit(1)
    print("SUCCESS: Runtime stack available")
    print()


def print_summary(rows: List[Dict[str, Any]]) -> None:
    """Print rows as an aligned plain-text table"""
    if not rows:
        return
    columns: List[str] = []
    for row in rows:
        columns.extend(key for key in row if key not in columns)
    cells = [[str(row.get(col, '')) for col in columns] for row in rows]
    widths = [max(len(col), *(len(line[i]) for line in cells)) for i, col in enumerate(columns)]
    print("  ".join(col.ljust(w) for col, w in zip(columns, widths)))
    print("  ".join("-" * w for w in widths))
    for line in cells:
        print("  ".join(cell.ljust(w) for cell, w in zip(line, widths)))


def build_config(args: argparse.Namespace) -> Dict[str, Any]:
    """Resolve the configuration of a subcommand; raises ValueError on invalid combinations"""
    if args.command == "sample":
        return {'sampler': SamplerFactory.config_from_args(args.method, args)}
    if args.command == "experiment":
        return {'experiment': ExperimentConfig.from_args(args)}
    if args.command == "meanfield" and args.T is None:
        args.T = 1.0 if args.variant == 'homotopy' else 10.0
    return {}


def _prior(runner: ExperimentRunner, args: argparse.Namespace, dim: int):
    return runner.resolve_prior(dim, args.prior_file, args.prior_scale, args.prior_random_spd)


def run_command(args: argparse.Namespace, config: Dict[str, Any], argv: Sequence[str]) -> None:
    runner = ExperimentRunner(ExperimentRunner.output_dir(args.out), args.seed)
    if args.command == "synthesize":
        runner.synthesize(args.kind, args.D, args.N, args.classes)
    elif args.command == "sample":
        data = runner.load_dataset(args.data)
        runner.sample(data, args.method, args.J, config['sampler'], _prior(runner, args, data.dim))
    elif args.command == "predict":
        runner.predict(args.features, args.ensemble, args.moments, args.mode, args.classes)
    elif args.command == "laplace":
        data = runner.load_dataset(args.data)
        runner.laplace(data, _prior(runner, args, data.dim), args.tol, args.max_iter)
    elif args.command == "experiment":
        runner.experiment(config['experiment'])
    elif args.command == "meanfield":
        data = runner.load_dataset(args.data)
        runner.meanfield(data, _prior(runner, args, data.dim), args.variant, args.T, args.dt, args.stationary)

    snapshot = {key: value.to_dict() for key, value in config.items()}
    manifest = runner.finish(args.command, snapshot, argv)
    print_summary(runner.summary)
    print(f"\nArtifacts written to {manifest.parent}")


def replay_argv(manifest_path: Path, out: Optional[str]) -> List[str]:
    """The recorded argv of a manifest, optionally redirected to another output directory"""
    argv = list(ConfigManager.load_manifest(manifest_path)['config']['argv'])
    if out:
        argv += ["--out", out]
    return argv


def main(argv: Optional[Sequence[str]] = None) -> None:
    """Main CLI entry point"""
    parser = create_argument_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)

    # Set up logging
    logger = Logger.get_logger()
    try:
        Logger.set_level(ConfigManager.get_log_level())
    except ValueError as e:
        parser.error(str(e))
    if args.debug:
        Logger.set_debug_mode(True)
        logger.debug("Debug mode enabled")

    # Check configuration if requested
    if args.check_config:
        check_configuration()
        return

    if args.manifest:
        try:
            argv = replay_argv(args.manifest, args.manifest_out)
        except (OSError, ValueError, KeyError) as e:
            print(f"Manifest Error: {e}")
            sys.exit(EXIT_IO if isinstance(e, OSError) else EXIT_USAGE)
        logger.info(f"Replaying: {' '.join(argv)}")
        args = parser.parse_args(argv)
        if args.debug:
            Logger.set_debug_mode(True)

    if args.command is None:
        parser.error("a command is required (synthesize, sample, predict, laplace, experiment, meanfield)")

    try:
        config = build_config(args)
    except StructuralError as e:
        print(f"Configuration Error: {e}")
        sys.exit(EXIT_STRUCTURAL)
    except ValueError as e:
        parser.error(str(e))

    try:
        run_command(args, config, argv)

    except StructuralError as e:
        print(f"Structural Error: {e}")
        sys.exit(EXIT_STRUCTURAL)
    except NumericError as e:
        print(f"Numeric Error: {e}")
        sys.exit(EXIT_NUMERIC)
    except OSError as e:
        print(f"I/O Error: {e}")
        sys.exit(EXIT_IO)
    except ValueError as e:
        print(f"Input Error: {e}")
        sys.exit(EXIT_STRUCTURAL)
    except KeyboardInterrupt:
        print("\nOperation cancelled by user")
        sys.exit(EXIT_INTERRUPTED)
    except Exception as e:
        logger.error(f"Unexpected error: {e}")
        if args.debug:
            import traceback
            traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
