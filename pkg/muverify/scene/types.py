"""
Data models for annotated counting scenes.
"""

import hashlib
from collections.abc import Iterator
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from muverify.core.errors import ConfigurationError
from muverify.scene.constants import MAX_GLYPH_HEIGHT, MAX_GLYPH_WIDTH, ObjectClass, SplitTag


class BoundingBox(BaseModel):
    """Tight, half-open pixel box ``[x0, x1) x [y0, y1)`` around one object."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    object_class: ObjectClass = Field(description="Class of the boxed object")
    x0: int = Field(ge=0, description="First column inside the box")
    y0: int = Field(ge=0, description="First row inside the box")
    x1: int = Field(description="First column past the box")
    y1: int = Field(description="First row past the box")

    @model_validator(mode="after")
    def _validate_extent(self) -> "BoundingBox":
        if self.x1 <= self.x0 or self.y1 <= self.y0:
            raise ValueError(f"Empty box: ({self.x0}, {self.y0}, {self.x1}, {self.y1})")
        return self

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def fits(self, width: int, height: int) -> bool:
        """Check the box lies inside a ``width x height`` image."""
        return self.x1 <= width and self.y1 <= height

    def to_list(self) -> list[Any]:
        """Serialize as ``[class, x0, y0, x1, y1]``."""
        return [self.object_class.value, self.x0, self.y0, self.x1, self.y1]

    @classmethod
    def from_list(cls, item: list[Any]) -> "BoundingBox":
        """Create a box from its ``[class, x0, y0, x1, y1]`` form."""
        if len(item) != 5:
            raise ValueError(f"Bounding box must have 5 entries, got {item}")
        return cls(object_class=ObjectClass(item[0]), x0=item[1], y0=item[2], x1=item[3], y1=item[4])


class SceneSample(BaseModel):
    """One grayscale image with its per-class annotations and scalar count label.

    The label starts as the sum of all class counts and is lowered by relabeling;
    counts and boxes are never touched, so ROI masks stay available for every class.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    image: np.ndarray = Field(description="H x W float32 intensities in [0, 1]")
    boxes: tuple[BoundingBox, ...] = Field(default=(), description="Tight boxes, one per drawn object")
    counts: dict[ObjectClass, int] = Field(description="Number of objects per class")
    label: int = Field(description="Scalar count target")

    @field_validator("image")
    @classmethod
    def _validate_image(cls, v: np.ndarray) -> np.ndarray:
        if not isinstance(v, np.ndarray) or v.ndim != 2 or v.size == 0:
            raise ValueError("Image must be a non-empty 2-D array")
        if v.dtype != np.float32:
            v = v.astype(np.float32)
        if float(v.min()) < 0.0 or float(v.max()) > 1.0:
            raise ValueError("Image intensities must lie in [0, 1]")
        if v.flags.writeable:
            v = v.copy()
            v.setflags(write=False)
        return v

    @model_validator(mode="after")
    def _validate_annotations(self) -> "SceneSample":
        height, width = self.image.shape
        for box in self.boxes:
            if not box.fits(width, height):
                raise ValueError(f"Box {box.to_list()} exceeds image {width}x{height}")
        if set(self.counts) != set(ObjectClass):
            raise ValueError(f"Counts must cover every class, got {sorted(self.counts)}")
        for object_class in ObjectClass:
            n_boxes = sum(1 for b in self.boxes if b.object_class == object_class)
            if self.counts[object_class] != n_boxes:
                raise ValueError(f"counts[{object_class}]={self.counts[object_class]} but {n_boxes} boxes")
        return self

    @property
    def shape(self) -> tuple[int, int]:
        return self.image.shape

    @property
    def total_count(self) -> int:
        """Sum of all per-class counts."""
        return sum(self.counts.values())

    def image_digest(self) -> str:
        """sha256 of the raw image bytes."""
        return hashlib.sha256(np.ascontiguousarray(self.image).tobytes()).hexdigest()

    def with_label(self, label: int) -> "SceneSample":
        """Return a copy sharing image, boxes and counts, with a new label."""
        return self.model_copy(update={"label": label})

    def same_as(self, other: "SceneSample") -> bool:
        """Element-wise equality, including bit-identical images."""
        return (
            self.label == other.label
            and self.counts == other.counts
            and self.boxes == other.boxes
            and np.array_equal(self.image, other.image)
        )


class DatasetSplit(BaseModel):
    """Ordered samples of one split plus the seed they were generated from."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    samples: tuple[SceneSample, ...] = Field(default=(), description="Samples in generation order")
    split_tag: SplitTag = Field(description="Split name")
    generation_seed: int = Field(description="Master seed the split was generated from")
    relabeled_for: tuple[ObjectClass, ...] = Field(
        default=(), description="Classes subtracted from the labels, in application order"
    )

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[SceneSample]:  # type: ignore[override]
        return iter(self.samples)

    def __getitem__(self, index: int) -> SceneSample:
        return self.samples[index]

    def labels(self) -> np.ndarray:
        """Labels as a float32 vector."""
        return np.asarray([s.label for s in self.samples], dtype=np.float32)

    def images(self) -> np.ndarray:
        """Images stacked into an ``N x H x W`` float32 array."""
        if not self.samples:
            return np.zeros((0, 0, 0), dtype=np.float32)
        return np.stack([s.image for s in self.samples]).astype(np.float32, copy=False)

    def class_counts(self, object_class: ObjectClass) -> np.ndarray:
        """Per-sample count of ``object_class``."""
        return np.asarray([s.counts[object_class] for s in self.samples], dtype=np.int64)

    def same_as(self, other: "DatasetSplit") -> bool:
        """Element-wise equality of two splits."""
        return (
            self.split_tag == other.split_tag
            and len(self) == len(other)
            and all(a.same_as(b) for a, b in zip(self.samples, other.samples, strict=True))
        )

    def digest(self) -> str:
        """sha256 over the split tag and every sample's label, counts and image bytes, in order."""
        h = hashlib.sha256(self.split_tag.value.encode())
        for sample in self.samples:
            counts = ",".join(f"{c.value}={n}" for c, n in sorted(sample.counts.items(), key=lambda kv: kv[0].value))
            h.update(f"{sample.label};{counts};".encode())
            h.update(np.ascontiguousarray(sample.image).tobytes())
        return h.hexdigest()

    def subset(self, indices: list[int]) -> "DatasetSplit":
        """Split restricted to ``indices`` (in the given order)."""
        return self.model_copy(update={"samples": tuple(self.samples[i] for i in indices)})


class RebalanceConfig(BaseModel):
    """Percentile rebalancing of the training split."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    hi_percentile: float = Field(default=0.70, ge=0.0, le=1.0, description="Labels above this quantile are thinned")
    lo_percentile: float = Field(default=0.10, ge=0.0, le=1.0, description="Labels at/below this quantile are copied")
    keep_probability: float = Field(default=0.5, ge=0.0, le=1.0, description="Keep probability in the top band")
    duplication_factor: int = Field(default=2, ge=1, description="Total copies of each bottom-band sample")
    enabled: bool = Field(default=True, description="Rebalance the train split before training")

    @model_validator(mode="after")
    def _validate_order(self) -> "RebalanceConfig":
        if not self.lo_percentile < self.hi_percentile:
            raise ValueError("lo_percentile must be smaller than hi_percentile")
        return self


class SplitSizes(BaseModel):
    """Number of samples per split."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    train: int = Field(default=2000, description="Training samples")
    val: int = Field(default=300, description="Validation samples")
    test: int = Field(default=300, description="Test samples")

    def get(self, split: SplitTag) -> int:
        return getattr(self, split.value)


def _default_rates() -> dict[ObjectClass, float]:
    return {c: 1.0 for c in ObjectClass}


class GenConfig(BaseModel):
    """Synthetic scene generator configuration."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    image_width: int = Field(default=64, description="Image width in pixels")
    image_height: int = Field(default=64, description="Image height in pixels")
    lambda_per_class: dict[ObjectClass, float] = Field(
        default_factory=_default_rates, description="Poisson rate of objects per class"
    )
    max_objects: int = Field(default=12, description="Cap on the total number of objects per image")
    noise_std: float = Field(default=0.05, ge=0.0, description="Std of the uniform background noise")
    background_level: float = Field(default=0.1, ge=0.0, le=1.0, description="Mean background intensity")
    intensity_range: tuple[float, float] = Field(default=(0.6, 1.0), description="Glyph intensity range")
    split_sizes: SplitSizes = Field(default_factory=SplitSizes, description="Samples per split")
    master_seed: int = Field(default=0, description="Seed all split streams derive from")
    rebalance: RebalanceConfig = Field(default_factory=RebalanceConfig, description="Train split rebalancing")

    @field_validator("lambda_per_class")
    @classmethod
    def _fill_rates(cls, v: dict[ObjectClass, float]) -> dict[ObjectClass, float]:
        # missing classes are absent from the scenes
        return {c: float(v.get(c, 0.0)) for c in ObjectClass}

    def verify(self) -> bool:
        """Verify the configuration.

        Raises:
            ConfigurationError: With every violated invariant listed
        """
        errors = []
        if self.image_width <= 0 or self.image_height <= 0:
            errors.append(f"image size must be positive, got {self.image_width}x{self.image_height}")
        elif self.image_width < MAX_GLYPH_WIDTH or self.image_height < MAX_GLYPH_HEIGHT:
            errors.append(f"image must be at least {MAX_GLYPH_WIDTH}x{MAX_GLYPH_HEIGHT} to hold every glyph")
        negative = [str(c) for c, rate in self.lambda_per_class.items() if rate < 0]
        if negative:
            errors.append(f"Poisson rates must be >= 0, negative for {negative}")
        if self.max_objects < 0:
            errors.append(f"max_objects must be >= 0, got {self.max_objects}")
        low, high = self.intensity_range
        if not 0.0 < low <= high <= 1.0:
            errors.append(f"intensity_range must satisfy 0 < low <= high <= 1, got {self.intensity_range}")
        if errors:
            raise ConfigurationError("invalid generator config:\n" + "\n".join(errors))
        return True
