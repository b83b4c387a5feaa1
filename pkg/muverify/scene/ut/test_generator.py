"""Unit tests for the scene generator."""

import itertools

import numpy as np
import pytest

from muverify.core.errors import ConfigurationError
from muverify.scene.constants import GLYPH_SPECS, ObjectClass, SplitTag
from muverify.scene.generator import generate_dataset, generate_sample, glyph_mask
from muverify.scene.types import GenConfig, SplitSizes


def test_generate_sample_is_deterministic(small_config: GenConfig):
    """Test same (config, seed) gives bit-identical samples."""
    first = generate_sample(small_config, 123)
    second = generate_sample(small_config, 123)
    assert first.same_as(second)
    assert first.image_digest() == second.image_digest()


def test_generate_sample_differs_across_seeds(small_config: GenConfig):
    """Test distinct seeds give distinct images."""
    assert generate_sample(small_config, 1).image_digest() != generate_sample(small_config, 2).image_digest()


def test_zero_rate_class_never_appears(small_config: GenConfig):
    """Test a class with rate 0 has zero count in every sample."""
    config = small_config.model_copy(update={"lambda_per_class": {c: 2.0 for c in ObjectClass}})
    config.lambda_per_class[ObjectClass.HUMAN] = 0.0
    for seed in range(200):
        sample = generate_sample(config, seed)
        assert sample.counts[ObjectClass.HUMAN] == 0
        assert all(b.object_class != ObjectClass.HUMAN for b in sample.boxes)


def test_label_and_boxes_match_counts(small_config: GenConfig):
    """Test label equals the count sum and boxes equal the total, over 1000 samples."""
    for seed in range(1000):
        sample = generate_sample(small_config, seed)
        assert sample.label == sum(sample.counts.values())
        assert len(sample.boxes) == sample.label
        assert sample.label <= small_config.max_objects
        for object_class in ObjectClass:
            assert sample.counts[object_class] == sum(1 for b in sample.boxes if b.object_class == object_class)


def test_poisson_mean_per_class():
    """Test empirical per-class mean count is within 3 standard errors of the rate."""
    rate, n = 2.0, 10_000
    config = GenConfig(
        image_width=32,
        image_height=32,
        max_objects=100,
        lambda_per_class={c: rate for c in ObjectClass},
    )
    counts = np.zeros((n, len(ObjectClass)))
    for seed in range(n):
        sample = generate_sample(config, (99, seed))
        counts[seed] = [sample.counts[c] for c in ObjectClass]
    standard_error = np.sqrt(rate / n)
    assert np.all(np.abs(counts.mean(axis=0) - rate) < 3 * standard_error)


def test_boxes_are_tight():
    """Test a lone object on a black background has its box equal to its pixel extent."""
    config = GenConfig(image_width=32, image_height=32, noise_std=0.0, background_level=0.0, max_objects=1)
    for object_class in ObjectClass:
        config.lambda_per_class = {c: (5.0 if c == object_class else 0.0) for c in ObjectClass}
        sample = generate_sample(config, 11)
        (box,) = sample.boxes
        rows, cols = np.nonzero(sample.image > 0)
        assert (box.x0, box.y0, box.x1, box.y1) == (cols.min(), rows.min(), cols.max() + 1, rows.max() + 1)


def test_truncation_caps_total(small_config: GenConfig):
    """Test totals never exceed max_objects under high rates."""
    config = small_config.model_copy(update={"lambda_per_class": {c: 10.0 for c in ObjectClass}, "max_objects": 5})
    for seed in range(50):
        assert generate_sample(config, seed).label == 5


def test_zero_size_image_raises():
    """Test a zero-size image is a configuration error."""
    with pytest.raises(ConfigurationError):
        generate_sample(GenConfig(image_width=0), 0)


def test_negative_rate_raises():
    """Test negative Poisson rates are rejected."""
    config = GenConfig(lambda_per_class={ObjectClass.HUMAN: -1.0})
    with pytest.raises(ConfigurationError, match="Poisson rates"):
        config.verify()


def test_glyphs_are_pairwise_distinct():
    """Test the four class glyphs differ at a shared canvas size."""
    masks = {c: glyph_mask(spec.shape, 11, 7)[0] for c, spec in GLYPH_SPECS.items()}
    for a, b in itertools.combinations(ObjectClass, 2):
        assert not np.array_equal(masks[a], masks[b]), f"{a} and {b} share a glyph"


def test_generate_dataset_sizes_and_determinism(small_config: GenConfig):
    """Test split lengths follow the config and regeneration is identical."""
    train, val, test = generate_dataset(small_config)
    assert (len(train), len(val), len(test)) == (40, 10, 10)
    assert [s.split_tag for s in (train, val, test)] == list(SplitTag)

    again = generate_dataset(small_config)
    for first, second in zip((train, val, test), again, strict=True):
        assert first.same_as(second)


def test_generate_dataset_default_sizes():
    """Test default split sizes are 2000/300/300."""
    sizes = GenConfig().split_sizes
    assert (sizes.train, sizes.val, sizes.test) == (2000, 300, 300)


def test_splits_share_no_image(small_config: GenConfig):
    """Test disjoint seed streams give no bit-identical images across splits."""
    train, val, test = generate_dataset(small_config)
    digests = {split.split_tag: {s.image_digest() for s in split} for split in (train, val, test)}
    for a, b in itertools.combinations(SplitTag, 2):
        assert digests[a].isdisjoint(digests[b])


def test_generate_dataset_rejects_empty_split(small_config: GenConfig):
    """Test a non-positive split size is a configuration error."""
    config = small_config.model_copy(update={"split_sizes": SplitSizes(train=10, val=0, test=5)})
    with pytest.raises(ConfigurationError, match="split sizes"):
        generate_dataset(config)
