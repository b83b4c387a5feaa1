"""Test fixtures for unlearn module."""

import numpy as np
import pytest

from muverify.model.arch import ArchConfig, ConvBlockSpec, TrainConfig
from muverify.model.functional import init_model
from muverify.model.snapshot import ModelSnapshot
from muverify.model.trainer import train
from muverify.scene.constants import ObjectClass, SplitTag
from muverify.scene.curation import relabel
from muverify.scene.generator import generate_split
from muverify.scene.types import DatasetSplit, GenConfig, SplitSizes


def snapshot_with_values(arch: ArchConfig, values: np.ndarray, seed: int = 0) -> ModelSnapshot:
    """Build a snapshot whose prunable weights take ``values`` in layer order; biases are 0.1."""
    model = init_model(arch, seed=seed)
    weights, offset = {}, 0
    for name, value in model.weights.items():
        if name.endswith(".weight"):
            weights[name] = values[offset : offset + value.size].reshape(value.shape)
            offset += value.size
        else:
            weights[name] = np.full(value.shape, 0.1, dtype=np.float32)
    assert offset == len(values)
    return model.derive(weights=weights)


@pytest.fixture(scope="module")
def arch_100() -> ArchConfig:
    """Fixture for an architecture with exactly 100 prunable weights."""
    return ArchConfig(
        input_height=8,
        input_width=8,
        conv_blocks=[ConvBlockSpec(out_channels=1, kernel_size=2, padding=1)],
        hidden_width=48,
    )


@pytest.fixture(scope="module")
def arch_1000() -> ArchConfig:
    """Fixture for an architecture with exactly 1000 prunable weights."""
    return ArchConfig(
        input_height=16,
        input_width=16,
        conv_blocks=[ConvBlockSpec(out_channels=2), ConvBlockSpec(out_channels=4)],
        hidden_width=182,
    )


@pytest.fixture(scope="module")
def tiny_arch() -> ArchConfig:
    """Fixture for a narrow 3-block network on 32x32 inputs."""
    return ArchConfig(
        input_height=32,
        input_width=32,
        conv_blocks=[ConvBlockSpec(out_channels=c) for c in (4, 8, 8)],
        hidden_width=8,
    )


@pytest.fixture(scope="module")
def train_split() -> DatasetSplit:
    """Fixture for a 40-sample 32x32 training split."""
    config = GenConfig(
        image_width=32,
        image_height=32,
        max_objects=8,
        split_sizes=SplitSizes(train=40, val=5, test=5),
        master_seed=4,
    )
    return generate_split(config, SplitTag.TRAIN)


@pytest.fixture(scope="module")
def data_prime(train_split: DatasetSplit) -> DatasetSplit:
    """Fixture for the training split relabeled to forget humans."""
    return relabel(train_split, ObjectClass.HUMAN)


@pytest.fixture(scope="module")
def original(tiny_arch: ArchConfig, train_split: DatasetSplit) -> ModelSnapshot:
    """Fixture for a briefly trained original snapshot."""
    return train(init_model(tiny_arch, seed=0), train_split, TrainConfig(epochs=1, batch_size=10, learning_rate=1e-3))


@pytest.fixture
def finetune_cfg() -> TrainConfig:
    """Fixture for a one-epoch fine-tune."""
    return TrainConfig(epochs=1, batch_size=10, learning_rate=1e-3, seed=2)
