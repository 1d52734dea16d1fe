from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List

from ..exceptions import EnsembleLogRegError, NumericError, StructuralError
from ..utils.artifacts import ArtifactStore


class Experiment(ABC):
    """Abstract base class for experiment recipes"""

    name: str = ""

    @abstractmethod
    def run(self) -> Any:
        """Run the recipe and return its result object"""
        pass

    @abstractmethod
    def write(self, store: ArtifactStore) -> List[Path]:
        """Write the result artifacts of the last run"""
        pass

    @abstractmethod
    def summary_rows(self) -> List[Dict[str, Any]]:
        """Rows of the human-readable summary table"""
        pass


class ExperimentError(EnsembleLogRegError):
    """Base exception for experiment errors"""
    pass


class ExperimentConfigError(ExperimentError, StructuralError):
    """Experiment inputs are invalid"""
    pass


class FailedRepeatsError(ExperimentError, NumericError):
    """Too many repeats of an experiment failed numerically"""

    def __init__(self, message: str, failures: int, repeats: int):
        self.failures = failures
        self.repeats = repeats
        super().__init__(message)
