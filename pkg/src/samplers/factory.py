from typing import Optional, Union

from .base import Sampler, SamplerConfigError
from .homotopy import HomotopySampler
from .second_order import SecondOrderSampler
from .stochastic import NoiseSource, StochasticSampler
from ..config import HomotopyConfig, SecondOrderConfig, StochasticConfig
from ..models import GaussianPrior, LikelihoodModel


SamplerConfig = Union[HomotopyConfig, SecondOrderConfig, StochasticConfig]

CONFIG_TYPES = {
    "homotopy": HomotopyConfig,
    "second-order": SecondOrderConfig,
    "stochastic": StochasticConfig,
}


class SamplerFactory:
    """Factory for creating samplers"""

    @staticmethod
    def config_from_args(method: str, args) -> SamplerConfig:
        """Build the config dataclass of ``method`` from a parsed CLI namespace"""
        try:
            return CONFIG_TYPES[method].from_args(args)
        except KeyError:
            raise SamplerConfigError(
                f"Unsupported sampler: {method}. Supported: {', '.join(CONFIG_TYPES)}"
            ) from None

    @staticmethod
    def create_sampler(
        method: str,
        model: LikelihoodModel,
        prior: GaussianPrior,
        config: Optional[SamplerConfig] = None,
        noise: Optional[NoiseSource] = None,
    ) -> Sampler:
        """Create a sampler; missing configs fall back to the method's defaults"""
        method_lower = method.lower()
        if method_lower not in CONFIG_TYPES:
            raise SamplerConfigError(f"Unsupported sampler: {method}. Supported: {', '.join(CONFIG_TYPES)}")
        if config is None:
            config = CONFIG_TYPES[method_lower]()
        elif not isinstance(config, CONFIG_TYPES[method_lower]):
            raise SamplerConfigError(f"{type(config).__name__} cannot configure the {method_lower} sampler")

        if method_lower == "homotopy":
            if prior.dim != model.dim:
                raise SamplerConfigError(f"Prior dimension {prior.dim} does not match model dimension {model.dim}")
            return HomotopySampler(model, config)

        elif method_lower == "second-order":
            return SecondOrderSampler(model, prior, config)

        else:
            return StochasticSampler(model, prior, config, noise)
