"""
Constants used by the counting model.
"""

from enum import Enum


class ModelTag(str, Enum):
    """Training provenance of a snapshot, in report row order."""

    ORIGINAL = "original"
    RETRAIN = "retrain"
    FINETUNE = "finetune"
    PRUNE = "prune"
    REINIT = "reinit"
    CONFUSE = "confuse"

    def __str__(self) -> str:
        """Return the string representation of the model tag."""
        return self.value

    @property
    def display_name(self) -> str:
        """Capitalized name used in report tables."""
        return self.value.capitalize()


class LayerKind(str, Enum):
    """Kinds of parameterized layers."""

    CONV = "conv"
    DENSE = "dense"

    def __str__(self) -> str:
        return self.value


INIT_SCHEME = "he_uniform_fan_in"
CHECKPOINT_FORMAT_VERSION = 1
CHECKPOINT_MANIFEST = "checkpoint.json"
CHECKPOINT_BLOB = "checkpoint.bin"
BLOB_DTYPE = "<f4"
