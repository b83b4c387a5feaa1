"""Unit tests for relabel, rebalance and roi_mask."""

import math
from collections import Counter

import numpy as np
import pytest

from muverify.core.errors import EmptyInputError
from muverify.scene.constants import ObjectClass
from muverify.scene.curation import label_histogram, nearest_rank, rebalance, relabel, roi_mask
from muverify.scene.generator import generate_dataset
from muverify.scene.types import BoundingBox, GenConfig, SceneSample
from muverify.scene.ut.conftest import make_sample, make_split


def test_relabel_removes_forget_class(mixed_sample: SceneSample):
    """Test counts (h=2,b=1,v=1,m=0) with label 4 relabel to 2 when forgetting humans."""
    assert mixed_sample.label == 4
    relabeled = relabel(make_split([mixed_sample]), ObjectClass.HUMAN)
    assert relabeled[0].label == 2
    # annotations are retained
    assert relabeled[0].counts == mixed_sample.counts
    assert relabeled[0].boxes == mixed_sample.boxes
    assert relabeled.relabeled_for == (ObjectClass.HUMAN,)


def test_relabel_identity_without_forget_class():
    """Test a sample without humans keeps its label."""
    sample = make_sample({ObjectClass.VEHICLE: 3})
    assert relabel(make_split([sample]), ObjectClass.HUMAN)[0].label == 3


def test_relabel_does_not_mutate_input(small_config: GenConfig):
    """Test relabel returns a new split and leaves the original labels in place."""
    train, _, _ = generate_dataset(small_config)
    before = [s.label for s in train]
    relabeled = relabel(train, ObjectClass.HUMAN)
    assert [s.label for s in train] == before
    for old, new in zip(train, relabeled, strict=True):
        assert new.label <= old.label
        assert (new.label == old.label) == (old.counts[ObjectClass.HUMAN] == 0)
        assert np.array_equal(new.image, old.image)


def test_relabel_twice_subtracts_twice(small_config: GenConfig):
    """Test relabel is not idempotent: a second call subtracts the class count again."""
    train, _, _ = generate_dataset(small_config)
    twice = relabel(relabel(train, ObjectClass.HUMAN), ObjectClass.HUMAN)
    for old, new in zip(train, twice, strict=True):
        assert new.label == old.label - 2 * old.counts[ObjectClass.HUMAN]


def test_nearest_rank():
    """Test nearest-rank quantiles on a known array."""
    values = np.repeat(np.arange(10), 100)
    assert nearest_rank(values, 0.70) == 6
    assert nearest_rank(values, 0.10) == 0
    assert nearest_rank(values, 1.0) == 9
    assert nearest_rank(values, 0.0) == 0


def test_rebalance_matches_simulation_oracle():
    """Test labels 0..9 x100 rebalance to the histogram of a direct simulation."""
    labels = [label for label in range(10) for _ in range(100)]
    split = make_split([make_sample({}, label=label) for label in labels])
    seed = 2024
    out = rebalance(split, hi_percentile=0.70, lo_percentile=0.10, seed=seed)

    # oracle: hi rank ceil(0.7 * 1000) -> value 6, lo rank ceil(0.1 * 1000) -> value 0
    rng = np.random.default_rng(seed)
    expected: Counter = Counter()
    for label in labels:
        if label > 6:
            if rng.random() < 0.5:
                expected[label] += 1
        elif label <= 0:
            expected[label] += 2
        else:
            expected[label] += 1
    assert label_histogram(out) == dict(sorted(expected.items()))
    assert label_histogram(out)[0] == 200
    assert all(label_histogram(out)[k] == 100 for k in range(1, 7))


def test_rebalance_identical_labels_unchanged():
    """Test identical labels put every sample in the middle band."""
    split = make_split([make_sample({}, label=3) for _ in range(50)])
    out = rebalance(split, seed=1)
    assert len(out) == 50
    assert label_histogram(out) == {3: 50}
    assert label_histogram(rebalance(split, seed=1)) == label_histogram(out)


def test_rebalance_only_upsamples_without_top_band():
    """Test no label above the hi threshold means the output only grows."""
    labels = [0] * 20 + [1] * 80
    split = make_split([make_sample({}, label=label) for label in labels])
    out = rebalance(split, seed=5)
    assert len(out) >= len(split)
    assert label_histogram(out) == {0: 40, 1: 80}


def test_rebalance_is_deterministic(small_config: GenConfig):
    """Test rebalance is a pure function of (split, seed)."""
    train, _, _ = generate_dataset(small_config)
    first = rebalance(train, seed=9)
    second = rebalance(train, seed=9)
    assert first.same_as(second)


def test_rebalance_empty_raises():
    """Test an empty split is an empty-input error."""
    with pytest.raises(EmptyInputError):
        rebalance(make_split([]))


def test_rebalance_rejects_inverted_percentiles():
    """Test lo_percentile must be below hi_percentile."""
    split = make_split([make_sample({}, label=1)])
    with pytest.raises(ValueError):
        rebalance(split, hi_percentile=0.1, lo_percentile=0.7)


def test_roi_mask_without_matching_boxes_is_zero():
    """Test a sample with no boxes of the requested classes gives an all-zero mask."""
    sample = make_sample({ObjectClass.VEHICLE: 2})
    mask = roi_mask(sample, {ObjectClass.HUMAN})
    assert mask.is_empty
    assert mask.values.sum() == 0


def test_roi_mask_half_open_box():
    """Test box (2,2,4,4) on an 8x8 image marks exactly 4 pixels."""
    box = BoundingBox(object_class=ObjectClass.HUMAN, x0=2, y0=2, x1=4, y1=4)
    sample = SceneSample(
        image=np.zeros((8, 8), dtype=np.float32),
        boxes=(box,),
        counts={c: int(c == ObjectClass.HUMAN) for c in ObjectClass},
        label=1,
    )
    mask = roi_mask(sample, {ObjectClass.HUMAN})
    assert mask.values.sum() == 4
    assert mask.values[2:4, 2:4].all()
    assert math.isclose(mask.area_fraction, 4 / 64)


def test_roi_mask_overlapping_boxes_are_idempotent():
    """Test two identical boxes give the same mask as one."""
    box = BoundingBox(object_class=ObjectClass.VEHICLE, x0=1, y0=1, x1=5, y1=4)

    def build(n: int) -> SceneSample:
        return SceneSample(
            image=np.zeros((8, 8), dtype=np.float32),
            boxes=(box,) * n,
            counts={c: (n if c == ObjectClass.VEHICLE else 0) for c in ObjectClass},
            label=n,
        )

    single = roi_mask(build(1), {ObjectClass.VEHICLE})
    double = roi_mask(build(2), {ObjectClass.VEHICLE})
    assert np.array_equal(single.values, double.values)
    assert double.values.max() == 1


def test_roi_mask_union_dominates_subsets(small_config: GenConfig):
    """Test the all-class mask is pixel-wise >= every single-class mask."""
    train, _, _ = generate_dataset(small_config)
    for sample in train:
        full = roi_mask(sample, set(ObjectClass)).values
        for object_class in ObjectClass:
            assert np.all(full >= roi_mask(sample, {object_class}).values)


def test_roi_mask_requires_classes(mixed_sample: SceneSample):
    """Test an empty class set is rejected."""
    with pytest.raises(ValueError):
        roi_mask(mixed_sample, set())
