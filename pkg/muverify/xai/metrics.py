"""
Verification metrics: Heatmap Coverage and Attention Shift.

Heatmaps enter exactly as produced by ``explain``; nothing is re-normalized here.
All reductions run in float64 and sum in sample order.
"""

import json
from collections.abc import Iterable, Sequence
from typing import Any

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from muverify.core.errors import EmptyInputError, InputShapeError, UndefinedMetricError
from muverify.scene.constants import ObjectClass
from muverify.scene.curation import RoiMask, roi_mask
from muverify.scene.types import SceneSample
from muverify.xai.constants import HUMAN_CLASSES, RETAINED_CLASSES, STD_CONVENTION, MetricName, ZeroMassPolicy
from muverify.xai.sidu import Heatmap


class MetricResult(BaseModel):
    """Value of one metric together with how many samples it rests on."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    metric: str = Field(description="Metric name, e.g. HC, r-HC, h-HC, AS")
    value: float = Field(description="Metric value")
    n_samples: int = Field(description="Samples that contributed to the value")
    n_skipped: int = Field(default=0, description="Samples dropped before averaging")
    policy: ZeroMassPolicy | None = Field(default=None, description="Zero-mass policy of coverage metrics")
    std_convention: str | None = Field(default=None, description="Standard deviation convention of AS")

    def to_dict(self) -> dict[str, Any]:
        return self.model_dump(mode="json")

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __float__(self) -> float:
        return self.value


def _as_array(item: Heatmap | RoiMask | np.ndarray) -> np.ndarray:
    if isinstance(item, (Heatmap, RoiMask)):
        item = item.values
    return np.asarray(item, dtype=np.float64)


def _check_aligned(first: Sequence, second: Sequence, what: str) -> None:
    if len(first) != len(second):
        raise InputShapeError(f"{what}: {len(first)} heatmaps but {len(second)} counterparts")


def _coverage(
    heatmaps: Sequence[Heatmap | np.ndarray],
    masks: Sequence[RoiMask | np.ndarray],
    policy: ZeroMassPolicy,
) -> tuple[list[float], int]:
    terms: list[float] = []
    n_skipped = 0
    for index, (heatmap, mask) in enumerate(zip(heatmaps, masks, strict=True)):
        h, m = _as_array(heatmap), _as_array(mask)
        if h.shape != m.shape:
            raise InputShapeError(f"Sample {index}: heatmap {h.shape} and mask {m.shape} differ")
        mass = h.sum()
        if mass <= 0.0:
            if policy == ZeroMassPolicy.SKIP:
                n_skipped += 1
                continue
            terms.append(0.0)
            continue
        terms.append(float((h * m).sum() / mass))
    return terms, n_skipped


def _mean(terms: list[float]) -> float:
    return float(np.mean(np.asarray(terms, dtype=np.float64)))


def heatmap_coverage(
    heatmaps: Sequence[Heatmap | np.ndarray],
    masks: Sequence[RoiMask | np.ndarray],
    zero_mass_policy: ZeroMassPolicy = ZeroMassPolicy.SKIP,
    metric: str = MetricName.HC.value,
) -> MetricResult:
    """Mean share of each heatmap's mass that falls inside its mask.

    Args:
        heatmaps: Heatmaps, index-aligned with ``masks``
        masks: Binary region-of-interest masks
        zero_mass_policy: Drop all-zero heatmaps (``skip``) or count them as 0 (``zero``)
        metric: Name recorded on the result

    Returns:
        MetricResult: Value in [0, 1]

    Raises:
        InputShapeError: If the lists or any pair differ in shape
        UndefinedMetricError: If no sample contributes
    """
    _check_aligned(heatmaps, masks, metric)
    policy = ZeroMassPolicy(zero_mass_policy)
    terms, n_skipped = _coverage(heatmaps, masks, policy)
    if not terms:
        raise UndefinedMetricError(f"{metric} is undefined: all {n_skipped} samples were skipped", n_skipped)
    if n_skipped:
        logger.warning(f"{metric}: skipped {n_skipped} zero-mass heatmaps")
    return MetricResult(metric=metric, value=_mean(terms), n_samples=len(terms), n_skipped=n_skipped, policy=policy)


def class_coverage(
    heatmaps: Sequence[Heatmap | np.ndarray],
    samples: Sequence[SceneSample],
    classes: Iterable[ObjectClass],
    zero_mass_policy: ZeroMassPolicy = ZeroMassPolicy.SKIP,
    metric: str | None = None,
) -> MetricResult:
    """Heatmap coverage over the boxes of ``classes``.

    Samples with no object of ``classes`` are skipped; their count is added to
    ``n_skipped`` alongside zero-mass skips.

    Raises:
        InputShapeError: If the lists are not aligned
        UndefinedMetricError: If every sample is skipped
    """
    classes = frozenset(ObjectClass(c) for c in classes)
    metric = metric or _class_metric_name(classes)
    _check_aligned(heatmaps, samples, metric)
    kept_heatmaps, kept_masks = [], []
    n_empty = 0
    for heatmap, sample in zip(heatmaps, samples, strict=True):
        mask = roi_mask(sample, classes)
        if mask.is_empty:
            n_empty += 1
            continue
        kept_heatmaps.append(heatmap)
        kept_masks.append(mask)
    if not kept_masks:
        raise UndefinedMetricError(f"{metric} is undefined: no sample contains {sorted(map(str, classes))}", n_empty)
    try:
        result = heatmap_coverage(kept_heatmaps, kept_masks, zero_mass_policy, metric)
    except UndefinedMetricError as e:
        raise UndefinedMetricError(str(e), e.n_skipped + n_empty) from e
    if n_empty:
        logger.debug(f"{metric}: skipped {n_empty} samples without {sorted(map(str, classes))}")
    return result.model_copy(update={"n_skipped": result.n_skipped + n_empty})


def _class_metric_name(classes: frozenset[ObjectClass]) -> str:
    if classes == RETAINED_CLASSES:
        return MetricName.RETAINED_HC.value
    if classes == HUMAN_CLASSES:
        return MetricName.HUMAN_HC.value
    return MetricName.HC.value


def attention_shift(
    unlearned_heatmaps: Sequence[Heatmap | np.ndarray], original_heatmaps: Sequence[Heatmap | np.ndarray]
) -> MetricResult:
    """Mean over samples of the population std of ``H_u - H_o`` over all pixels.

    Raises:
        InputShapeError: If the lists or any pair differ in shape
        EmptyInputError: If the lists are empty
    """
    _check_aligned(unlearned_heatmaps, original_heatmaps, MetricName.AS.value)
    if not unlearned_heatmaps:
        raise EmptyInputError("attention_shift needs at least one heatmap pair")
    terms: list[float] = []
    for index, (unlearned, original) in enumerate(zip(unlearned_heatmaps, original_heatmaps, strict=True)):
        u, o = _as_array(unlearned), _as_array(original)
        if u.shape != o.shape:
            raise InputShapeError(f"Sample {index}: heatmaps {u.shape} and {o.shape} differ")
        terms.append(float(np.std(u - o, ddof=0)))
    return MetricResult(
        metric=MetricName.AS.value, value=_mean(terms), n_samples=len(terms), std_convention=STD_CONVENTION
    )
