"""
Interface definitions for unlearning methods.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from muverify.model.snapshot import ModelSnapshot
    from muverify.scene.types import DatasetSplit


class UnlearnerInterface(ABC):
    """Interface for unlearning methods.

    Every method perturbs a trained snapshot and then fine-tunes the result on the
    relabeled data, so implementations only differ in the perturbation step.
    """

    @abstractmethod
    def perturb(self, model: ModelSnapshot) -> tuple[ModelSnapshot, dict[str, Any]]:
        """Apply the method's weight perturbation.

        Args:
            model: The trained original snapshot (never mutated)

        Returns:
            tuple: The perturbed snapshot and a dict of perturbation statistics
        """
        pass

    @abstractmethod
    def unlearn(self, model: ModelSnapshot, data_prime: DatasetSplit) -> ModelSnapshot:
        """Perturb, then fine-tune on the relabeled split.

        Args:
            model: The trained original snapshot
            data_prime: The relabeled training split

        Returns:
            ModelSnapshot: The unlearned snapshot
        """
        pass

    @abstractmethod
    def get_config(self) -> dict[str, Any]:
        """Get the unlearner's configuration.

        Returns:
            Dict[str, Any]: The unlearner's configuration dictionary
        """
        pass
