"""
Initialization and inference on model snapshots.
"""

import math
from collections.abc import Sequence

import numpy as np
import torch
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from muverify.core.determinism import torch_generator
from muverify.core.errors import InputShapeError
from muverify.model.arch import ArchConfig, fan_in, is_weight
from muverify.model.constants import INIT_SCHEME, ModelTag
from muverify.model.snapshot import ModelSnapshot

DEFAULT_INFERENCE_BATCH = 256


class ForwardOutput(BaseModel):
    """Prediction and last conv block activations from one forward pass."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    prediction: float = Field(description="Predicted count, unbounded")
    feature_maps: np.ndarray = Field(description="C x h x w post-ReLU activations")


def init_bound(shape: tuple[int, ...]) -> float:
    """Half-width of the uniform initialization of a weight tensor."""
    return math.sqrt(6.0 / fan_in(shape))


def draw_init(name: str, shape: tuple[int, ...], generator: torch.Generator) -> np.ndarray:
    """Draw one parameter tensor from the initialization scheme; biases start at zero."""
    if not is_weight(name):
        return np.zeros(shape, dtype=np.float32)
    bound = init_bound(shape)
    values = (torch.rand(shape, generator=generator, dtype=torch.float32) * 2.0 - 1.0) * bound
    return values.numpy()


def init_model(arch: ArchConfig, seed: int, tag: ModelTag = ModelTag.ORIGINAL) -> ModelSnapshot:
    """Create a freshly initialized snapshot.

    Weights are drawn from U(-b, b) with ``b = sqrt(6 / fan_in)`` in layer order
    from a single generator seeded with ``seed``.

    Args:
        arch: Architecture to instantiate
        seed: Initialization seed
        tag: Provenance tag of the new snapshot

    Returns:
        ModelSnapshot: The initialized snapshot

    Raises:
        ConfigurationError: If the architecture is inconsistent
    """
    arch.verify()
    generator = torch_generator(seed)
    weights = {name: draw_init(name, shape, generator) for name, shape in arch.weight_shapes().items()}
    snapshot = ModelSnapshot(arch=arch, weights=weights, tag=tag, seed=seed, init_scheme=INIT_SCHEME)
    logger.debug(f"Initialized {snapshot!r}")
    return snapshot


def check_images(arch: ArchConfig, images: np.ndarray) -> np.ndarray:
    images = np.array(images, dtype=np.float32)
    if images.ndim != 3 or images.shape[1:] != (arch.input_height, arch.input_width):
        raise InputShapeError(
            f"Expected images shaped (N, {arch.input_height}, {arch.input_width}), got {images.shape}"
        )
    return images


def forward_batch(
    model: ModelSnapshot,
    images: np.ndarray | Sequence[np.ndarray],
    batch_size: int = DEFAULT_INFERENCE_BATCH,
    pad: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Run inference on a stack of images.

    Args:
        model: Snapshot to evaluate
        images: ``N x H x W`` intensities
        batch_size: Images per forward pass; results keep input order
        pad: Zero-pad every chunk to ``batch_size`` images, so that an image gets
            bit-identical outputs wherever it sits in the stack

    Returns:
        tuple: Predictions ``(N,)`` and feature maps ``(N, C, h, w)``, both float32

    Raises:
        InputShapeError: If image dimensions do not match the architecture
    """
    images = check_images(model.arch, np.asarray(images))
    module = model.module()
    predictions, features = [], []
    with torch.no_grad():
        for start in range(0, len(images), batch_size):
            chunk = images[start : start + batch_size]
            n = len(chunk)
            if pad and n < batch_size:
                chunk = np.concatenate([chunk, np.zeros((batch_size - n, *chunk.shape[1:]), dtype=chunk.dtype)])
            prediction, feature_maps = module(torch.from_numpy(chunk).unsqueeze(1))
            predictions.append(prediction.numpy()[:n])
            features.append(feature_maps.numpy()[:n])
    if not predictions:
        c, h, w = model.arch.feature_shape()
        return np.zeros(0, dtype=np.float32), np.zeros((0, c, h, w), dtype=np.float32)
    return np.concatenate(predictions), np.concatenate(features)


def forward(model: ModelSnapshot, image: np.ndarray) -> ForwardOutput:
    """Predict the count of one ``H x W`` image and expose its last conv feature maps.

    Raises:
        InputShapeError: If the image is not ``input_height x input_width``
    """
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 2:
        raise InputShapeError(f"Expected a 2-D image, got shape {image.shape}")
    predictions, features = forward_batch(model, image[None])
    return ForwardOutput(prediction=float(predictions[0]), feature_maps=features[0])
