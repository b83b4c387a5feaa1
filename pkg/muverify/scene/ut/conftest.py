"""Test fixtures for scene module."""

import numpy as np
import pytest

from muverify.scene.constants import ObjectClass, SplitTag
from muverify.scene.types import BoundingBox, DatasetSplit, GenConfig, SceneSample, SplitSizes


def make_sample(counts: dict[ObjectClass, int], size: int = 8, label: int | None = None) -> SceneSample:
    """Build a sample with one 1x1 box per object, laid out along the first rows."""
    boxes = []
    slot = 0
    for object_class in ObjectClass:
        for _ in range(counts.get(object_class, 0)):
            row, col = divmod(slot, size)
            boxes.append(BoundingBox(object_class=object_class, x0=col, y0=row, x1=col + 1, y1=row + 1))
            slot += 1
    full_counts = {c: counts.get(c, 0) for c in ObjectClass}
    return SceneSample(
        image=np.zeros((size, size), dtype=np.float32),
        boxes=tuple(boxes),
        counts=full_counts,
        label=sum(full_counts.values()) if label is None else label,
    )


def make_split(samples: list[SceneSample], split: SplitTag = SplitTag.TRAIN) -> DatasetSplit:
    """Wrap samples into a split."""
    return DatasetSplit(samples=tuple(samples), split_tag=split, generation_seed=0)


@pytest.fixture(scope="module")
def small_config() -> GenConfig:
    """Fixture for a fast 32x32 generator config."""
    return GenConfig(
        image_width=32,
        image_height=32,
        max_objects=8,
        split_sizes=SplitSizes(train=40, val=10, test=10),
        master_seed=7,
    )


@pytest.fixture
def mixed_sample() -> SceneSample:
    """Fixture for a sample with counts h=2, b=1, v=1, m=0."""
    return make_sample({ObjectClass.HUMAN: 2, ObjectClass.BICYCLE: 1, ObjectClass.VEHICLE: 1})
