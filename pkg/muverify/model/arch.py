"""
Architecture and training configuration of the counting regressor.
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from muverify.core.errors import ConfigurationError
from muverify.model.constants import LayerKind

MIN_FEATURE_SIDE = 4


class ConvBlockSpec(BaseModel):
    """One convolution block: conv, ReLU, 2x2 max-pool."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    out_channels: int = Field(gt=0, description="Number of output channels")
    kernel_size: int = Field(default=3, gt=0, description="Square kernel side")
    padding: int = Field(default=1, ge=0, description="Zero padding on each side")


def _default_blocks() -> list[ConvBlockSpec]:
    return [ConvBlockSpec(out_channels=c) for c in (16, 32, 64)]


class ArchConfig(BaseModel):
    """Counting CNN: conv blocks, global average pool, one hidden dense layer, scalar output."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    input_height: int = Field(default=64, gt=0, description="Input image height")
    input_width: int = Field(default=64, gt=0, description="Input image width")
    conv_blocks: list[ConvBlockSpec] = Field(default_factory=_default_blocks, description="Conv blocks in order")
    hidden_width: int = Field(default=32, gt=0, description="Width of the hidden dense layer")

    @model_validator(mode="after")
    def _validate_blocks(self) -> "ArchConfig":
        if not self.conv_blocks:
            raise ValueError("At least one conv block is required")
        return self

    def feature_side(self) -> tuple[int, int]:
        """Spatial size ``(h, w)`` of the last block's feature maps."""
        height, width = self.input_height, self.input_width
        for block in self.conv_blocks:
            height = (height + 2 * block.padding - block.kernel_size + 1) // 2
            width = (width + 2 * block.padding - block.kernel_size + 1) // 2
        return height, width

    @property
    def feature_channels(self) -> int:
        return self.conv_blocks[-1].out_channels

    def feature_shape(self) -> tuple[int, int, int]:
        """Shape ``(C, h, w)`` of the feature maps exposed for SIDU."""
        return (self.feature_channels, *self.feature_side())

    def verify(self) -> bool:
        """Verify the architecture yields usable feature maps.

        Raises:
            ConfigurationError: If the last feature map is smaller than 4x4
        """
        height, width = self.feature_side()
        if height < MIN_FEATURE_SIDE or width < MIN_FEATURE_SIDE:
            raise ConfigurationError(
                f"Last conv feature map is {height}x{width} for a {self.input_height}x{self.input_width} input; "
                f"at least {MIN_FEATURE_SIDE}x{MIN_FEATURE_SIDE} is required"
            )
        return True

    def weight_shapes(self) -> dict[str, tuple[int, ...]]:
        """Parameter names and shapes, in layer order."""
        shapes: dict[str, tuple[int, ...]] = {}
        in_channels = 1
        for i, block in enumerate(self.conv_blocks):
            k = block.kernel_size
            shapes[f"convs.{i}.weight"] = (block.out_channels, in_channels, k, k)
            shapes[f"convs.{i}.bias"] = (block.out_channels,)
            in_channels = block.out_channels
        shapes["hidden.weight"] = (self.hidden_width, in_channels)
        shapes["hidden.bias"] = (self.hidden_width,)
        shapes["out.weight"] = (1, self.hidden_width)
        shapes["out.bias"] = (1,)
        return shapes


def layer_kind(name: str) -> LayerKind:
    """Kind of the layer a parameter belongs to."""
    return LayerKind.CONV if name.startswith("convs.") else LayerKind.DENSE


def is_weight(name: str) -> bool:
    """True for weight tensors, False for biases."""
    return name.endswith(".weight")


def fan_in(shape: tuple[int, ...]) -> int:
    """Number of inputs feeding one output unit of a weight tensor."""
    n = 1
    for side in shape[1:]:
        n *= side
    return n


class TrainConfig(BaseModel):
    """Mini-batch SGD on mean squared error."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    batch_size: int = Field(default=50, ge=1, description="Samples per SGD step")
    learning_rate: float = Field(default=5e-4, gt=0, description="SGD learning rate")
    epochs: int = Field(default=10, ge=0, description="Passes over the data")
    optimizer: str = Field(default="sgd", pattern="^sgd$", description="Plain SGD, no momentum or weight decay")
    seed: int = Field(default=0, description="Seed of the per-epoch shuffling")
