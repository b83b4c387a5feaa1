"""Test fixtures for model module."""

import pytest

from muverify.model.arch import ArchConfig, ConvBlockSpec, TrainConfig
from muverify.model.functional import init_model
from muverify.model.snapshot import ModelSnapshot
from muverify.scene.constants import ObjectClass, SplitTag
from muverify.scene.generator import generate_split
from muverify.scene.types import DatasetSplit, GenConfig, SplitSizes


@pytest.fixture(scope="module")
def tiny_arch() -> ArchConfig:
    """Fixture for a narrow 3-block network on 32x32 inputs (4x4 final maps)."""
    return ArchConfig(
        input_height=32,
        input_width=32,
        conv_blocks=[ConvBlockSpec(out_channels=c) for c in (4, 8, 8)],
        hidden_width=8,
    )


@pytest.fixture(scope="module")
def tiny_gen_config() -> GenConfig:
    """Fixture for 32x32 scenes with two expected objects per class."""
    return GenConfig(
        image_width=32,
        image_height=32,
        lambda_per_class={c: 2.0 for c in ObjectClass},
        max_objects=12,
        split_sizes=SplitSizes(train=50, val=20, test=20),
        master_seed=3,
    )


@pytest.fixture(scope="module")
def tiny_train(tiny_gen_config: GenConfig) -> DatasetSplit:
    """Fixture for a 50-sample training split."""
    return generate_split(tiny_gen_config, SplitTag.TRAIN)


@pytest.fixture(scope="module")
def tiny_val(tiny_gen_config: GenConfig) -> DatasetSplit:
    """Fixture for a 20-sample validation split."""
    return generate_split(tiny_gen_config, SplitTag.VAL)


@pytest.fixture
def tiny_model(tiny_arch: ArchConfig) -> ModelSnapshot:
    """Fixture for a freshly initialized tiny model."""
    return init_model(tiny_arch, seed=0)


@pytest.fixture
def quick_train_config() -> TrainConfig:
    """Fixture for a two-epoch run with small batches."""
    return TrainConfig(batch_size=8, learning_rate=1e-3, epochs=2, seed=1)
