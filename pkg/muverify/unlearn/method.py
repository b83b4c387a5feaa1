"""
Unlearning method configuration.
"""

from pydantic import BaseModel, ConfigDict, Field

from muverify.model.arch import TrainConfig
from muverify.unlearn.constants import (
    CONFUSE_SIGMA_SWEEP,
    DEFAULT_FINETUNE_EPOCHS,
    DEFAULT_FRACTION,
    DEFAULT_SIGMA,
    Granularity,
    RankingScope,
    UnlearnTag,
)


def default_finetune_config() -> TrainConfig:
    """Three epochs of SGD at batch 50 and lr 5e-4."""
    return TrainConfig(epochs=DEFAULT_FINETUNE_EPOCHS)


class UnlearnMethod(BaseModel):
    """One unlearning method and its hyper-parameters."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    tag: UnlearnTag = Field(description="Unlearning method")
    fraction: float = Field(default=DEFAULT_FRACTION, ge=0.0, le=1.0, description="Share of weights pruned/reinit")
    sigma: float = Field(default=DEFAULT_SIGMA, ge=0.0, description="Std of the Confuse noise on conv weights")
    granularity: Granularity = Field(default=Granularity.PER_WEIGHT, description="Ranking unit for Prune/Reinit")
    scope: RankingScope = Field(default=RankingScope.GLOBAL, description="Rank across layers or within each")
    finetune_cfg: TrainConfig = Field(default_factory=default_finetune_config, description="Fine-tuning on D'")
    seed: int = Field(default=0, description="Seed of the perturbation draws")
    label: str | None = Field(default=None, description="Report row label, defaults to the tag")

    @property
    def display_tag(self) -> str:
        return self.label or self.tag.value

    def with_seed(self, seed: int) -> "UnlearnMethod":
        """Copy with the perturbation and fine-tune shuffling seeds set to ``seed``."""
        finetune_cfg = self.finetune_cfg.model_copy(update={"seed": seed})
        return self.model_copy(update={"seed": seed, "finetune_cfg": finetune_cfg})

    def __repr__(self) -> str:
        return f"UnlearnMethod({self.display_tag}, fraction={self.fraction}, sigma={self.sigma})"


def sigma_sweep(method: UnlearnMethod, sigmas: tuple[float, ...] = CONFUSE_SIGMA_SWEEP) -> list[UnlearnMethod]:
    """Expand a Confuse method into one variant per noise scale, labelled ``confuse@sigma``."""
    if method.tag != UnlearnTag.CONFUSE:
        raise ValueError(f"Only confuse can be swept over sigma, got {method.tag}")
    return [method.model_copy(update={"sigma": s, "label": f"confuse@{s:g}"}) for s in sigmas]
