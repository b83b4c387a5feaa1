"""
Procedural generator of annotated counting scenes.

Each object class is drawn as its own glyph family at a random position, size and
intensity over a noisy background. Every sample is a pure function of (config, seed),
so splits can be generated in any order or in parallel.
"""

import math
from collections.abc import Sequence
from functools import lru_cache

import numpy as np
from loguru import logger
from PIL import Image, ImageDraw

from muverify.core.determinism import make_rng
from muverify.core.errors import ConfigurationError
from muverify.scene.constants import GLYPH_SPECS, GlyphShape, ObjectClass, SplitTag
from muverify.scene.types import BoundingBox, DatasetSplit, GenConfig, SceneSample


@lru_cache(maxsize=4096)
def glyph_mask(shape: GlyphShape, width: int, height: int) -> tuple[np.ndarray, tuple[int, int, int, int]]:
    """Rasterize a glyph on a ``width x height`` canvas.

    Returns:
        tuple: Boolean mask of the canvas and the tight half-open box ``(x0, y0, x1, y1)`` of its pixels
    """
    canvas = Image.new("L", (width, height), 0)
    draw = ImageDraw.Draw(canvas)
    right, bottom = width - 1, height - 1
    if shape == GlyphShape.FILLED_ELLIPSE:
        draw.ellipse([0, 0, right, bottom], fill=255)
    elif shape == GlyphShape.TWIN_RINGS:
        diameter = min(height, (width + 1) // 2)
        draw.ellipse([0, bottom - diameter + 1, diameter - 1, bottom], outline=255, width=1)
        draw.ellipse([width - diameter, bottom - diameter + 1, right, bottom], outline=255, width=1)
    elif shape == GlyphShape.FILLED_RECTANGLE:
        draw.rectangle([0, 0, right, bottom], fill=255)
    elif shape == GlyphShape.CROSS:
        draw.line([0, bottom // 2, right, bottom // 2], fill=255, width=2)
        draw.line([right // 2, 0, right // 2, bottom], fill=255, width=2)
    else:
        raise ValueError(f"Unsupported glyph shape: {shape}")
    bbox = canvas.getbbox()
    if bbox is None:
        raise ValueError(f"Glyph {shape} at {width}x{height} rendered no pixels")
    mask = np.asarray(canvas, dtype=np.uint8) > 0
    mask.setflags(write=False)
    return mask, bbox


def sample_counts(config: GenConfig, rng: np.random.Generator) -> list[ObjectClass]:
    """Draw the classes of the objects in one scene.

    Per-class counts are Poisson; if their total exceeds ``max_objects`` a random
    subset of ``max_objects`` objects is kept.

    Returns:
        list[ObjectClass]: One entry per object to draw, in drawing order
    """
    objects: list[ObjectClass] = []
    for object_class in ObjectClass:
        objects.extend([object_class] * int(rng.poisson(config.lambda_per_class[object_class])))
    if len(objects) > config.max_objects:
        keep = np.sort(rng.permutation(len(objects))[: config.max_objects])
        objects = [objects[i] for i in keep]
    return objects


def _background(config: GenConfig, rng: np.random.Generator) -> np.ndarray:
    # uniform on [-a, a] has std a / sqrt(3)
    half_width = math.sqrt(3.0) * config.noise_std
    noise = rng.uniform(-half_width, half_width, size=(config.image_height, config.image_width))
    return np.clip(config.background_level + noise, 0.0, 1.0)


def generate_sample(config: GenConfig, seed: int | Sequence[int]) -> SceneSample:
    """Generate one annotated scene.

    Args:
        config: Generator configuration
        seed: Integer seed, or a seed tuple such as ``(master_seed, stream, index)``

    Returns:
        SceneSample: Image, tight boxes, per-class counts and the total count label

    Raises:
        ConfigurationError: If the configuration is invalid
    """
    config.verify()
    rng = make_rng(seed)
    objects = sample_counts(config, rng)
    image = _background(config, rng)

    boxes: list[BoundingBox] = []
    low, high = config.intensity_range
    for object_class in objects:
        spec = GLYPH_SPECS[object_class]
        width = int(rng.integers(spec.width[0], spec.width[1] + 1))
        height = int(rng.integers(spec.height[0], spec.height[1] + 1))
        left = int(rng.integers(0, config.image_width - width + 1))
        top = int(rng.integers(0, config.image_height - height + 1))
        intensity = float(rng.uniform(low, high))

        mask, (bx0, by0, bx1, by1) = glyph_mask(spec.shape, width, height)
        region = image[top : top + height, left : left + width]
        np.maximum(region, np.where(mask, intensity, 0.0), out=region)
        boxes.append(
            BoundingBox(object_class=object_class, x0=left + bx0, y0=top + by0, x1=left + bx1, y1=top + by1)
        )

    counts = {c: sum(1 for o in objects if o == c) for c in ObjectClass}
    sample = SceneSample(image=image.astype(np.float32), boxes=tuple(boxes), counts=counts, label=len(objects))
    assert sample.label == sum(sample.counts.values())
    return sample


def generate_split(config: GenConfig, split: SplitTag, size: int | None = None) -> DatasetSplit:
    """Generate one split from the ``(master_seed, split stream, index)`` seed family."""
    size = config.split_sizes.get(split) if size is None else size
    samples = tuple(generate_sample(config, (config.master_seed, split.stream, i)) for i in range(size))
    logger.debug(f"Generated {split} split: {size} samples, seed {config.master_seed}")
    return DatasetSplit(samples=samples, split_tag=split, generation_seed=config.master_seed)


def generate_dataset(config: GenConfig) -> tuple[DatasetSplit, DatasetSplit, DatasetSplit]:
    """Generate the train, val and test splits from disjoint seed streams.

    Args:
        config: Generator configuration, including split sizes and the master seed

    Returns:
        tuple: ``(train, val, test)`` splits

    Raises:
        ConfigurationError: If the configuration is invalid or a split size is not positive
    """
    config.verify()
    sizes = config.split_sizes
    empty = [str(s) for s in SplitTag if sizes.get(s) <= 0]
    if empty:
        raise ConfigurationError(f"split sizes must be > 0, got non-positive size for {empty}")
    train, val, test = (generate_split(config, split) for split in SplitTag)
    logger.info(f"Generated dataset with seed {config.master_seed}: {len(train)}/{len(val)}/{len(test)}")
    return train, val, test
