"""
Constants used by the unlearning methods.
"""

from enum import Enum

from muverify.model.constants import ModelTag


class UnlearnTag(str, Enum):
    """Unlearning methods."""

    FINETUNE = "finetune"
    PRUNE = "prune"
    REINIT = "reinit"
    CONFUSE = "confuse"

    def __str__(self) -> str:
        """Return the string representation of the unlearning method."""
        return self.value

    def __repr__(self) -> str:
        return self.value

    @property
    def model_tag(self) -> ModelTag:
        """Tag carried by snapshots this method produces."""
        return ModelTag(self.value)


class Granularity(str, Enum):
    """Unit ranked by the low-L1 selection."""

    PER_WEIGHT = "per_weight"
    PER_FILTER = "per_filter"

    def __str__(self) -> str:
        return self.value


class RankingScope(str, Enum):
    """Whether magnitudes are ranked across all layers or within each layer."""

    GLOBAL = "global"
    PER_LAYER = "per_layer"

    def __str__(self) -> str:
        return self.value


DEFAULT_FRACTION = 0.95
DEFAULT_SIGMA = 0.1
DEFAULT_FINETUNE_EPOCHS = 3
CONFUSE_SIGMA_SWEEP = (0.05, 0.1, 0.2)
PROVENANCE_FILE = "provenance.json"
