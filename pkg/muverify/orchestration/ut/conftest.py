"""Test fixtures for orchestration module."""

from pathlib import Path

import pytest

from muverify.model.arch import ArchConfig, ConvBlockSpec, TrainConfig
from muverify.orchestration.experiment_config import ExperimentConfig
from muverify.orchestration.manager import ExperimentManager
from muverify.scene.types import GenConfig, SplitSizes
from muverify.unlearn.constants import UnlearnTag
from muverify.unlearn.method import UnlearnMethod
from muverify.xai.sidu import SiduConfig


def tiny_config(output_dir: Path, **update) -> ExperimentConfig:
    """A one-seed experiment on 32x32 scenes that runs in seconds."""
    one_epoch = TrainConfig(epochs=1, batch_size=10, learning_rate=1e-3)
    config = ExperimentConfig(
        name="tiny",
        gen=GenConfig(
            image_width=32, image_height=32, max_objects=8, split_sizes=SplitSizes(train=40, val=10, test=10)
        ),
        arch=ArchConfig(
            input_height=32,
            input_width=32,
            conv_blocks=[ConvBlockSpec(out_channels=c) for c in (4, 8, 8)],
            hidden_width=8,
        ),
        train_original=one_epoch,
        train_retrain=one_epoch,
        unlearn_methods=[UnlearnMethod(tag=tag, finetune_cfg=one_epoch) for tag in UnlearnTag],
        sidu=SiduConfig(mask_batch_size=8),
        eval_sample_count=4,
        seeds=[0],
        output_dir=output_dir,
    )
    return config.model_copy(update=update)


@pytest.fixture
def tiny(tmp_path: Path) -> ExperimentConfig:
    """Fixture for a tiny config writing under a fresh temporary directory."""
    return tiny_config(tmp_path / "out")


@pytest.fixture(scope="module")
def finished_run(tmp_path_factory: pytest.TempPathFactory) -> ExperimentManager:
    """Fixture for a manager that has run the tiny experiment to completion."""
    manager = ExperimentManager(tiny_config(tmp_path_factory.mktemp("run") / "out"))
    manager.execute()
    return manager
