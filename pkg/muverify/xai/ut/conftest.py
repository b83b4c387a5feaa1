"""Test fixtures for xai module."""

import numpy as np
import pytest

from muverify.model.arch import ArchConfig, ConvBlockSpec
from muverify.model.functional import init_model
from muverify.model.snapshot import ModelSnapshot
from muverify.scene.constants import ObjectClass
from muverify.scene.types import BoundingBox, SceneSample

# per-channel 1x1 conv weight and bias, and the linear head over the pooled channels
ORACLE_CONV_WEIGHTS = np.array([1.0, -1.0, 2.0])
ORACLE_CONV_BIASES = np.array([0.0, 1.0, -1.0])
ORACLE_HEAD = np.array([1.0, -0.5, 1.5])
ORACLE_HEAD_BIAS = 0.25


def pointwise_model(
    conv_weights: np.ndarray, conv_biases: np.ndarray, head: np.ndarray, head_bias: float
) -> ModelSnapshot:
    """Build an 8x8-input model of 1x1 convolutions whose prediction is linear in the pooled maps.

    The hidden layer is the identity, so the output is ``head . mean(maxpool(relu(a_c x + b_c)))`` + bias.
    """
    c = len(conv_weights)
    arch = ArchConfig(
        input_height=8,
        input_width=8,
        conv_blocks=[ConvBlockSpec(out_channels=c, kernel_size=1, padding=0)],
        hidden_width=c,
    )
    weights = {
        "convs.0.weight": np.asarray(conv_weights, dtype=np.float32).reshape(c, 1, 1, 1),
        "convs.0.bias": np.asarray(conv_biases, dtype=np.float32),
        "hidden.weight": np.eye(c, dtype=np.float32),
        "hidden.bias": np.zeros(c, dtype=np.float32),
        "out.weight": np.asarray(head, dtype=np.float32).reshape(1, c),
        "out.bias": np.array([head_bias], dtype=np.float32),
    }
    return init_model(arch, seed=0).derive(weights=weights)


def boxed_sample(boxes: list[tuple[ObjectClass, int, int, int, int]], size: int = 4) -> SceneSample:
    """Build a blank sample with the given ``(class, x0, y0, x1, y1)`` boxes."""
    counts = {c: sum(1 for b in boxes if b[0] == c) for c in ObjectClass}
    return SceneSample(
        image=np.zeros((size, size), dtype=np.float32),
        boxes=tuple(BoundingBox(object_class=c, x0=x0, y0=y0, x1=x1, y1=y1) for c, x0, y0, x1, y1 in boxes),
        counts=counts,
        label=len(boxes),
    )


@pytest.fixture(scope="module")
def oracle_model() -> ModelSnapshot:
    """Fixture for the 3-channel hand-constructed model."""
    return pointwise_model(ORACLE_CONV_WEIGHTS, ORACLE_CONV_BIASES, ORACLE_HEAD, ORACLE_HEAD_BIAS)


@pytest.fixture(scope="module")
def oracle_image() -> np.ndarray:
    """Fixture for an 8x8 image of sixteenths."""
    return (np.random.default_rng(11).integers(0, 17, size=(8, 8)) / 16.0).astype(np.float32)


@pytest.fixture(scope="module")
def tiny_model() -> ModelSnapshot:
    """Fixture for an untrained 32x32 model with 8 final channels."""
    arch = ArchConfig(
        input_height=32,
        input_width=32,
        conv_blocks=[ConvBlockSpec(out_channels=c) for c in (4, 8, 8)],
        hidden_width=8,
    )
    return init_model(arch, seed=0)


@pytest.fixture(scope="module")
def tiny_image() -> np.ndarray:
    """Fixture for a random 32x32 image."""
    return np.random.default_rng(5).random((32, 32)).astype(np.float32)
