"""
Dataset curation: relabeling for unlearning, percentile rebalancing and ROI masks.
"""

import math
from collections import Counter
from collections.abc import Iterable

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator

from muverify.core.determinism import make_rng
from muverify.core.errors import EmptyInputError
from muverify.scene.constants import ObjectClass
from muverify.scene.types import DatasetSplit, RebalanceConfig, SceneSample


class RoiMask(BaseModel):
    """Binary region-of-interest mask built from the boxes of a class subset."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray = Field(description="H x W uint8 mask, 1 inside a selected box")
    classes: frozenset[ObjectClass] = Field(description="Classes whose boxes were rasterized")

    @field_validator("values")
    @classmethod
    def _validate_values(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 2:
            raise ValueError("ROI mask must be 2-D")
        if not np.isin(v, (0, 1)).all():
            raise ValueError("ROI mask must be binary")
        return v.astype(np.uint8, copy=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def is_empty(self) -> bool:
        return not bool(self.values.any())

    @property
    def area_fraction(self) -> float:
        return float(self.values.mean())


def relabel(dataset: DatasetSplit, forget_class: ObjectClass) -> DatasetSplit:
    """Build the curated split D' by removing ``forget_class`` from every label.

    Images, boxes and counts are kept so ROI masks can still be built for the
    forgotten class. The input split is not modified. Each call subtracts the class
    count again; callers apply it exactly once.

    Args:
        dataset: Split to relabel
        forget_class: Class whose count is subtracted from the label

    Returns:
        DatasetSplit: New split with ``label' = label - counts[forget_class]``
    """
    forget_class = ObjectClass(forget_class)
    if forget_class in dataset.relabeled_for:
        logger.warning(f"Split {dataset.split_tag} already relabeled for {forget_class}; subtracting again")
    samples = tuple(s.with_label(s.label - s.counts[forget_class]) for s in dataset.samples)
    changed = sum(1 for old, new in zip(dataset.samples, samples, strict=True) if old.label != new.label)
    logger.debug(f"Relabeled {dataset.split_tag} for {forget_class}: {changed}/{len(samples)} labels changed")
    return dataset.model_copy(
        update={"samples": samples, "relabeled_for": (*dataset.relabeled_for, forget_class)}
    )


def nearest_rank(sorted_values: np.ndarray, fraction: float) -> float:
    """Nearest-rank quantile of an ascending array."""
    n = len(sorted_values)
    # round away float noise such as 0.7 * 1000 = 700.0000000000001
    rank = max(1, math.ceil(round(fraction * n, 9)))
    return float(sorted_values[min(rank, n) - 1])


def rebalance(
    train: DatasetSplit,
    hi_percentile: float = 0.70,
    lo_percentile: float = 0.10,
    seed: int = 0,
    keep_probability: float = 0.5,
    duplication_factor: int = 2,
) -> DatasetSplit:
    """Thin the high-count tail and duplicate the low-count tail of a training split.

    Samples whose label is above the ``hi_percentile`` label value are kept with
    probability ``keep_probability`` (one uniform draw per such sample, in order);
    samples at or below the ``lo_percentile`` value appear ``duplication_factor`` times
    in a row; the rest pass through. When both thresholds coincide, samples at the
    shared value stay in the middle band.

    Args:
        train: Training split to rebalance
        hi_percentile: Quantile above which samples are thinned
        lo_percentile: Quantile at or below which samples are duplicated
        seed: Seed of the sub-sampling draws
        keep_probability: Keep probability of top-band samples
        duplication_factor: Total copies of each bottom-band sample

    Returns:
        DatasetSplit: The rebalanced split

    Raises:
        EmptyInputError: If the split is empty
        ValueError: If the percentiles or magnitudes are out of range
    """
    config = RebalanceConfig(
        hi_percentile=hi_percentile,
        lo_percentile=lo_percentile,
        keep_probability=keep_probability,
        duplication_factor=duplication_factor,
    )
    if len(train) == 0:
        raise EmptyInputError("Cannot rebalance an empty split")

    labels = np.sort(train.labels())
    hi_value = nearest_rank(labels, config.hi_percentile)
    lo_value = nearest_rank(labels, config.lo_percentile)
    rng = make_rng(seed)

    def in_bottom(label: int) -> bool:
        if lo_value == hi_value:
            return label < lo_value
        return label <= lo_value

    out: list[SceneSample] = []
    dropped = duplicated = 0
    for sample in train.samples:
        if sample.label > hi_value:
            if rng.random() < config.keep_probability:
                out.append(sample)
            else:
                dropped += 1
        elif in_bottom(sample.label):
            out.extend([sample] * config.duplication_factor)
            duplicated += 1
        else:
            out.append(sample)

    logger.info(
        f"Rebalanced {train.split_tag}: thresholds lo={lo_value:g} hi={hi_value:g}, "
        f"dropped {dropped}, duplicated {duplicated}, {len(train)} -> {len(out)} samples"
    )
    if dropped == 0 and duplicated == 0:
        logger.warning("Rebalance left the split unchanged")
    return train.model_copy(update={"samples": tuple(out)})


def roi_mask(sample: SceneSample, classes: Iterable[ObjectClass]) -> RoiMask:
    """Rasterize the boxes of ``classes`` into a binary mask.

    Args:
        sample: Annotated scene
        classes: Non-empty set of classes of interest

    Returns:
        RoiMask: 1 for every pixel inside at least one selected box, 0 elsewhere

    Raises:
        ValueError: If ``classes`` is empty
    """
    selected = frozenset(ObjectClass(c) for c in classes)
    if not selected:
        raise ValueError("roi_mask needs at least one class")
    mask = np.zeros(sample.shape, dtype=np.uint8)
    for box in sample.boxes:
        if box.object_class in selected:
            mask[box.y0 : box.y1, box.x0 : box.x1] = 1
    return RoiMask(values=mask, classes=selected)


def label_histogram(split: DatasetSplit) -> dict[int, int]:
    """Count of samples per label value, sorted by label."""
    return dict(sorted(Counter(int(s.label) for s in split.samples).items()))
