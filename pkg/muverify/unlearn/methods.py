"""
Unlearning method implementations.

Every method perturbs the trained snapshot and then fine-tunes the result on the
relabeled training split; Finetune is the empty perturbation.
"""

from typing import Any

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from muverify.core.determinism import make_rng, torch_generator
from muverify.core.errors import ConfigurationError
from muverify.core.interface import UnlearnerInterface
from muverify.model.arch import TrainConfig
from muverify.model.constants import ModelTag
from muverify.model.functional import draw_init
from muverify.model.snapshot import ModelSnapshot
from muverify.model.trainer import train
from muverify.scene.types import DatasetSplit
from muverify.unlearn.constants import Granularity, RankingScope, UnlearnTag
from muverify.unlearn.method import UnlearnMethod
from muverify.unlearn.selection import WeightSelection, prunable_sparsity, select_low_l1


class PerturbationStats(BaseModel):
    """What the perturbation step did, measured before fine-tuning."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_prunable: int = Field(description="Prunable (non-bias) weights P")
    n_selected: int = Field(default=0, description="Weights selected for pruning or reinit")
    n_changed: int = Field(description="Weights whose value changed")
    sparsity: float = Field(description="Share of exactly-zero prunable weights after perturbation")


def _stats(before: ModelSnapshot, after: ModelSnapshot, selection: WeightSelection | None = None) -> PerturbationStats:
    n_changed = sum(
        int(np.count_nonzero(before.weights[name] != after.weights[name])) for name in before.weights
    )
    return PerturbationStats(
        n_prunable=sum(before.weights[name].size for name in before.prunable_names()),
        n_selected=selection.count if selection is not None else 0,
        n_changed=n_changed,
        sparsity=prunable_sparsity(after),
    )


def zero_selected(model: ModelSnapshot, selection: WeightSelection) -> ModelSnapshot:
    """Set every selected weight to exactly zero; biases are untouched."""
    weights = dict(model.weights)
    for name, mask in selection.masks.items():
        weights[name] = np.where(mask, np.float32(0.0), model.weights[name])
    return model.derive(tag=ModelTag.PRUNE, weights=weights)


def redraw_selected(model: ModelSnapshot, selection: WeightSelection, seed: int) -> ModelSnapshot:
    """Redraw selected weights from the initialization scheme of their layer.

    A fresh tensor is drawn for every prunable layer in layer order from one
    generator seeded with ``seed``; unselected entries keep their exact values.
    """
    generator = torch_generator(seed)
    weights = dict(model.weights)
    for name, mask in selection.masks.items():
        fresh = draw_init(name, mask.shape, generator)
        weights[name] = np.where(mask, fresh, model.weights[name])
    return model.derive(tag=ModelTag.REINIT, weights=weights)


def add_conv_noise(model: ModelSnapshot, sigma: float, seed: int) -> ModelSnapshot:
    """Add independent N(0, sigma^2) noise to every convolutional weight.

    Dense layers and all biases are left as they are.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    weights = dict(model.weights)
    if sigma > 0:
        rng = make_rng(seed)
        for name in model.conv_weight_names():
            value = model.weights[name]
            weights[name] = (value.astype(np.float64) + rng.normal(0.0, sigma, size=value.shape)).astype(np.float32)
    return model.derive(tag=ModelTag.CONFUSE, weights=weights)


class BaseUnlearner(BaseModel, UnlearnerInterface):
    """Base class for all unlearners."""

    model_config = ConfigDict(extra="forbid")

    method: UnlearnMethod = Field(description="Method configuration")

    def perturb(self, model: ModelSnapshot) -> tuple[ModelSnapshot, dict[str, Any]]:
        """Apply the weight perturbation.

        Args:
            model: The trained original snapshot

        Returns:
            tuple: The perturbed snapshot and its perturbation statistics
        """
        raise NotImplementedError("Subclasses must implement perturb")

    def unlearn(self, model: ModelSnapshot, data_prime: DatasetSplit) -> ModelSnapshot:
        """Perturb, then fine-tune on the relabeled split with ``method.finetune_cfg``.

        The returned snapshot records the method, its seeds and the perturbation
        statistics under ``provenance["unlearning"]``.
        """
        if model.tag != ModelTag.ORIGINAL:
            logger.warning(f"Unlearning a snapshot tagged {model.tag}, expected {ModelTag.ORIGINAL}")
        perturbed, stats = self.perturb(model)
        logger.info(f"{self.method!r}: perturbed {stats['n_changed']} weights, sparsity {stats['sparsity']:.4f}")
        tuned = train(perturbed, data_prime, self.method.finetune_cfg, tag=self.method.tag.model_tag)
        return tuned.derive(
            unlearning={
                "method": self.get_config(),
                "display_tag": self.method.display_tag,
                "source_digest": model.digest(),
                "perturbation": stats,
            }
        )

    def get_config(self) -> dict[str, Any]:
        """Get the unlearner's configuration.

        Returns:
            Dict[str, Any]: The method configuration dictionary
        """
        return self.method.model_dump(mode="json")

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.method!r})"


class FinetuneUnlearner(BaseUnlearner):
    """Fine-tuning on the relabeled data only."""

    def perturb(self, model: ModelSnapshot) -> tuple[ModelSnapshot, dict[str, Any]]:
        perturbed = model.derive(tag=ModelTag.FINETUNE)
        return perturbed, _stats(model, perturbed).model_dump()


class PruneUnlearner(BaseUnlearner):
    """Zero the lowest-magnitude weights, then fine-tune."""

    def perturb(self, model: ModelSnapshot) -> tuple[ModelSnapshot, dict[str, Any]]:
        selection = select_low_l1(model, self.method.fraction, self.method.granularity, self.method.scope)
        perturbed = zero_selected(model, selection)
        return perturbed, _stats(model, perturbed, selection).model_dump()


class ReinitUnlearner(BaseUnlearner):
    """Redraw the lowest-magnitude weights from the initialization scheme, then fine-tune."""

    def perturb(self, model: ModelSnapshot) -> tuple[ModelSnapshot, dict[str, Any]]:
        selection = select_low_l1(model, self.method.fraction, self.method.granularity, self.method.scope)
        perturbed = redraw_selected(model, selection, self.method.seed)
        return perturbed, _stats(model, perturbed, selection).model_dump()


class ConfuseUnlearner(BaseUnlearner):
    """Gaussian noise on the convolutional weights, then fine-tune."""

    def perturb(self, model: ModelSnapshot) -> tuple[ModelSnapshot, dict[str, Any]]:
        perturbed = add_conv_noise(model, self.method.sigma, self.method.seed)
        return perturbed, _stats(model, perturbed).model_dump()


def create_unlearner(method: UnlearnMethod) -> UnlearnerInterface:
    """Create an unlearner instance based on the method tag.

    Args:
        method: Method configuration

    Returns:
        UnlearnerInterface: An unlearner instance

    Raises:
        ConfigurationError: If the tag is not supported
    """
    unlearners: dict[UnlearnTag, type[BaseUnlearner]] = {
        UnlearnTag.FINETUNE: FinetuneUnlearner,
        UnlearnTag.PRUNE: PruneUnlearner,
        UnlearnTag.REINIT: ReinitUnlearner,
        UnlearnTag.CONFUSE: ConfuseUnlearner,
    }

    if method.tag not in unlearners:
        raise ConfigurationError(f"Unsupported unlearning method: {method.tag}")

    return unlearners[method.tag](method=method)


def run_unlearning(method: UnlearnMethod, model: ModelSnapshot, data_prime: DatasetSplit) -> ModelSnapshot:
    """Apply ``method`` to the trained original and fine-tune on ``data_prime``."""
    return create_unlearner(method).unlearn(model, data_prime)


def finetune(model: ModelSnapshot, data_prime: DatasetSplit, cfg: TrainConfig) -> ModelSnapshot:
    """Fine-tune on the relabeled split; tagged ``finetune``."""
    return run_unlearning(UnlearnMethod(tag=UnlearnTag.FINETUNE, finetune_cfg=cfg), model, data_prime)


def prune(
    model: ModelSnapshot,
    fraction: float,
    data_prime: DatasetSplit,
    cfg: TrainConfig,
    granularity: Granularity = Granularity.PER_WEIGHT,
    scope: RankingScope = RankingScope.GLOBAL,
) -> ModelSnapshot:
    """Zero the ``fraction`` lowest-|w| weights and fine-tune; tagged ``prune``."""
    method = UnlearnMethod(
        tag=UnlearnTag.PRUNE, fraction=fraction, granularity=granularity, scope=scope, finetune_cfg=cfg
    )
    return run_unlearning(method, model, data_prime)


def reinit(
    model: ModelSnapshot,
    fraction: float,
    data_prime: DatasetSplit,
    cfg: TrainConfig,
    seed: int,
    granularity: Granularity = Granularity.PER_WEIGHT,
    scope: RankingScope = RankingScope.GLOBAL,
) -> ModelSnapshot:
    """Redraw the ``fraction`` lowest-|w| weights and fine-tune; tagged ``reinit``."""
    method = UnlearnMethod(
        tag=UnlearnTag.REINIT,
        fraction=fraction,
        granularity=granularity,
        scope=scope,
        finetune_cfg=cfg,
        seed=seed,
    )
    return run_unlearning(method, model, data_prime)


def confuse(
    model: ModelSnapshot, sigma: float, data_prime: DatasetSplit, cfg: TrainConfig, seed: int
) -> ModelSnapshot:
    """Add N(0, sigma^2) noise to conv weights and fine-tune; tagged ``confuse``."""
    method = UnlearnMethod(tag=UnlearnTag.CONFUSE, sigma=sigma, finetune_cfg=cfg, seed=seed)
    return run_unlearning(method, model, data_prime)
