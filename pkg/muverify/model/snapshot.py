"""
Immutable weight snapshots of the counting regressor.
"""

import hashlib
from collections.abc import Mapping
from typing import Any

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from muverify.model.arch import ArchConfig, is_weight, layer_kind
from muverify.model.constants import INIT_SCHEME, LayerKind, ModelTag
from muverify.model.network import CountingNet, build_module


class TrainingHistory(BaseModel):
    """Per-epoch mean losses accumulated over every training call on a lineage."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    train_loss: tuple[float, ...] = Field(default=(), description="Mean training MSE per epoch")
    val_loss: tuple[float, ...] = Field(default=(), description="Validation MSE per epoch, when tracked")

    def extend(self, train_loss: list[float], val_loss: list[float]) -> "TrainingHistory":
        return TrainingHistory(
            train_loss=self.train_loss + tuple(train_loss),
            val_loss=self.val_loss + tuple(val_loss),
        )


def _freeze(value: np.ndarray | torch.Tensor) -> np.ndarray:
    if isinstance(value, torch.Tensor):
        value = value.detach().cpu().numpy()
    array = np.array(value, dtype=np.float32, copy=True, order="C")
    array.setflags(write=False)
    return array


class ModelSnapshot(BaseModel):
    """Architecture, named float32 weights and the provenance tag of one trained state.

    Weights are read-only arrays. Every operation that changes them returns a new
    snapshot, so a snapshot can be shared between concurrent forward passes.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True, protected_namespaces=())

    arch: ArchConfig = Field(description="Architecture the weights belong to")
    weights: dict[str, np.ndarray] = Field(description="Parameters keyed by state-dict name, in layer order")
    tag: ModelTag = Field(description="Training provenance tag, fixed at creation")
    seed: int = Field(description="Initialization seed of the lineage")
    init_scheme: str = Field(default=INIT_SCHEME, description="Weight initialization scheme")
    provenance: dict[str, Any] = Field(default_factory=dict, description="JSON-serializable lineage details")
    history: TrainingHistory = Field(default_factory=TrainingHistory, description="Loss history")

    _module: CountingNet | None = PrivateAttr(default=None)

    @field_validator("weights", mode="before")
    @classmethod
    def _freeze_weights(cls, v: Mapping[str, Any]) -> dict[str, np.ndarray]:
        return {name: _freeze(value) for name, value in v.items()}

    @model_validator(mode="after")
    def _validate_shapes(self) -> "ModelSnapshot":
        expected = self.arch.weight_shapes()
        if set(expected) != set(self.weights):
            missing = sorted(set(expected) - set(self.weights))
            extra = sorted(set(self.weights) - set(expected))
            raise ValueError(f"Weight names do not match the architecture (missing={missing}, extra={extra})")
        for name, shape in expected.items():
            if self.weights[name].shape != shape:
                raise ValueError(f"Weight {name} has shape {self.weights[name].shape}, expected {shape}")
        # keep layer order regardless of the order weights were passed in
        object.__setattr__(self, "weights", {name: self.weights[name] for name in expected})
        return self

    def __repr__(self) -> str:
        return f"ModelSnapshot(tag={self.tag}, seed={self.seed}, params={self.num_parameters()})"

    def num_parameters(self) -> int:
        return sum(int(w.size) for w in self.weights.values())

    def prunable_names(self) -> list[str]:
        """Conv and dense weight tensors in layer order; biases excluded."""
        return [name for name in self.weights if is_weight(name)]

    def conv_weight_names(self) -> list[str]:
        return [name for name in self.prunable_names() if layer_kind(name) == LayerKind.CONV]

    def digest(self) -> str:
        """sha256 over parameter names, shapes and float32 bytes."""
        h = hashlib.sha256()
        for name, value in self.weights.items():
            h.update(name.encode())
            h.update(str(value.shape).encode())
            h.update(value.tobytes())
        return h.hexdigest()

    def derive(
        self,
        tag: ModelTag | None = None,
        weights: Mapping[str, np.ndarray | torch.Tensor] | None = None,
        history: TrainingHistory | None = None,
        **provenance: Any,
    ) -> "ModelSnapshot":
        """Create a new snapshot on the same lineage.

        Args:
            tag: Tag of the new snapshot, defaults to this snapshot's tag
            weights: Replacement weights, defaults to this snapshot's weights
            history: Replacement loss history
            **provenance: Entries merged into the provenance record

        Returns:
            ModelSnapshot: The derived snapshot
        """
        return ModelSnapshot(
            arch=self.arch,
            weights=dict(self.weights) if weights is None else dict(weights),
            tag=self.tag if tag is None else tag,
            seed=self.seed,
            init_scheme=self.init_scheme,
            provenance={**self.provenance, **provenance},
            history=self.history if history is None else history,
        )

    def module(self) -> CountingNet:
        """Frozen eval-mode module for inference, built once per snapshot."""
        if self._module is None:
            self._module = build_module(self.arch, self.weights)
        return self._module

    def same_weights(self, other: "ModelSnapshot") -> bool:
        """Bit-identical weights."""
        return self.weights.keys() == other.weights.keys() and all(
            self.weights[name].tobytes() == other.weights[name].tobytes() for name in self.weights
        )
