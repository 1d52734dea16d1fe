import math
import os
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Optional

from .sampler_config import DEFAULT_HOMOTOPY_STEP, DEFAULT_SECOND_ORDER_STEP, DEFAULT_TIME_CAP
from ..utils.artifacts import ArtifactStore


class ConfigManager:
    """Default resolution, environment overrides and manifest replay"""

    STACK = ('numpy', 'scipy')
    DEV_STACK = ('pytest', 'pytest-cov', 'black', 'flake8', 'mypy')

    @staticmethod
    def get_output_dir(cli_value: Optional[str] = None) -> Path:
        """Output directory from --out, ENSEMBLE_LOGREG_OUT, or ./runs"""
        return Path(cli_value or os.getenv('ENSEMBLE_LOGREG_OUT', 'runs'))

    @staticmethod
    def get_log_level() -> str:
        """Log level from ENSEMBLE_LOGREG_LOG_LEVEL (default INFO)"""
        return os.getenv('ENSEMBLE_LOGREG_LOG_LEVEL', 'INFO')

    @staticmethod
    def default_step_size(method: str) -> float:
        """Default Δs per sampler"""
        return DEFAULT_HOMOTOPY_STEP if method == 'homotopy' else DEFAULT_SECOND_ORDER_STEP

    @staticmethod
    def default_max_steps(step_size: float) -> int:
        """Step cap of the second-order sampler"""
        return int(math.ceil(DEFAULT_TIME_CAP / step_size))

    @staticmethod
    def load_manifest(path: Path) -> Dict[str, Any]:
        """Load a manifest written by a previous run"""
        manifest = ArtifactStore.read_json(path)
        if 'subcommand' not in manifest or 'argv' not in manifest.get('config', {}):
            raise ValueError(f"{path} is not a run manifest (missing subcommand or argv)")
        return manifest

    @staticmethod
    def package_versions() -> Dict[str, Optional[str]]:
        """Installed versions of the runtime and development stack"""
        versions: Dict[str, Optional[str]] = {}
        for name in ConfigManager.STACK + ConfigManager.DEV_STACK:
            try:
                versions[name] = metadata.version(name)
            except metadata.PackageNotFoundError:
                versions[name] = None
        return versions

    @staticmethod
    def print_environment_status() -> None:
        """Print status of environment variables and installed packages"""
        print("Environment Configuration:")
        print(f"  Output directory: {ConfigManager.get_output_dir()}")
        print(f"  Log level: {ConfigManager.get_log_level()}")
        print("  Packages:")
        for name, version in ConfigManager.package_versions().items():
            print(f"    {name}: {version or 'NOT INSTALLED'}")
        print()
