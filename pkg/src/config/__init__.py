from .config_manager import ConfigManager
from .experiment_config import ExperimentConfig
from .sampler_config import HomotopyConfig, SecondOrderConfig, StochasticConfig

__all__ = ['ConfigManager', 'ExperimentConfig', 'HomotopyConfig', 'SecondOrderConfig', 'StochasticConfig']
