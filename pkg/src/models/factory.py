from typing import Optional, Union

from .base import LikelihoodModel, ModelError
from .dataset import Dataset, GaussianPrior
from .logistic import LogisticModel
from .multiclass import SoftmaxModel


class ModelFactory:
    """Factory for creating likelihood models and matching priors"""

    @staticmethod
    def create_model(data: Dataset, kind: Optional[str] = None) -> LikelihoodModel:
        """Create the likelihood for ``data``; the kind defaults to the dataset's label range"""
        if kind is None:
            kind = "logistic" if data.is_binary else "softmax"

        kind_lower = kind.lower()

        if kind_lower == "logistic":
            return LogisticModel(data)

        elif kind_lower == "softmax":
            return SoftmaxModel(data)

        else:
            raise ModelError(f"Unsupported model: {kind}. Supported: logistic, softmax")

    @staticmethod
    def stacked_prior(prior: GaussianPrior, model: LikelihoodModel) -> GaussianPrior:
        """Lift a per-class prior to the model's stacked parameter (block-diagonal copies)"""
        if prior.dim == model.dim:
            return prior
        blocks, rest = divmod(model.dim, prior.dim)
        if rest:
            raise ModelError(f"Prior dimension {prior.dim} does not divide model dimension {model.dim}")
        return prior.block_diagonal(blocks)

    @staticmethod
    def as_model(data: Union[Dataset, LikelihoodModel]) -> LikelihoodModel:
        """Accept either a dataset or an already-built likelihood"""
        if isinstance(data, LikelihoodModel):
            return data
        return ModelFactory.create_model(data)
