"""
Gradient-free attribution from last-conv-layer feature maps.

Each feature map becomes a soft mask over the input; masks are weighted by how
little masking changes the prediction (similarity difference) and by how much
their prediction differs from the other masks' (uniqueness).
"""

from typing import Any

import numpy as np
import torch
import torch.nn.functional as F
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator

from muverify.core.errors import EmptyInputError, InputShapeError
from muverify.model.functional import check_images, forward_batch
from muverify.model.snapshot import ModelSnapshot
from muverify.xai.constants import ADAPTIVE_SIGMA_SCALE, MIN_ADAPTIVE_SIGMA, SdSigmaMode


class SiduConfig(BaseModel):
    """Attribution settings."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    binarize_threshold: float = Field(
        default=0.5, gt=0.0, lt=1.0, description="Threshold applied after per-map min-max normalization"
    )
    sd_sigma: float = Field(default=0.25, gt=0.0, description="Kernel width of the similarity difference")
    sd_sigma_mode: SdSigmaMode = Field(default=SdSigmaMode.FIXED, description="Fixed width or scaled by |p_o|")
    upsample: str = Field(default="bilinear", description="Interpolation used to reach input resolution")
    mask_batch_size: int = Field(default=64, ge=1, description="Masked images per forward pass")

    @field_validator("upsample")
    @classmethod
    def _validate_upsample(cls, v: str) -> str:
        if v != "bilinear":
            raise ValueError(f"Only bilinear upsampling is supported, got {v!r}")
        return v

    def sigma_for(self, p_o: float) -> float:
        """Kernel width used for an image whose unmasked prediction is ``p_o``."""
        if self.sd_sigma_mode == SdSigmaMode.ADAPTIVE:
            return max(MIN_ADAPTIVE_SIGMA, ADAPTIVE_SIGMA_SCALE * abs(p_o))
        return self.sd_sigma


class MaskSet(BaseModel):
    """One soft mask per feature-map channel, at input resolution."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    masks: np.ndarray = Field(description="C x H x W float32 values in [0, 1]")
    source_shape: tuple[int, int, int] = Field(description="(C, h, w) of the raw feature maps")
    p_o: float | None = Field(
        default=None, description="Unmasked prediction from the pass that produced the feature maps"
    )

    def __len__(self) -> int:
        return int(self.masks.shape[0])

    @property
    def image_shape(self) -> tuple[int, int]:
        return int(self.masks.shape[1]), int(self.masks.shape[2])


class MaskedPredictions(BaseModel):
    """Unmasked prediction and one prediction per mask, in channel order."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    p_o: float = Field(description="Prediction on the unmasked image")
    p_masked: np.ndarray = Field(description="(C,) float64 predictions on the masked images")


class Heatmap(BaseModel):
    """Normalized attribution map of one image under one model."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray = Field(description="H x W float32 values in [0, 1]")
    model_tag: str = Field(default="", description="Display tag of the producing snapshot")
    metadata: dict[str, Any] = Field(default_factory=dict, description="Kernel width, mask count, degeneracy")

    @field_validator("values")
    @classmethod
    def _validate_values(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float32)
        if v.ndim != 2 or v.size == 0:
            raise ValueError(f"Heatmap must be a non-empty 2-D grid, got shape {v.shape}")
        return v

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def mass(self) -> float:
        return float(self.values.sum(dtype=np.float64))

    @property
    def is_degenerate(self) -> bool:
        return bool(self.metadata.get("degenerate", not self.values.any()))

    def __repr__(self) -> str:
        return f"Heatmap({self.model_tag or '?'}, {self.shape[0]}x{self.shape[1]}, mass={self.mass:.4g})"


def min_max_normalize(values: np.ndarray) -> tuple[np.ndarray, bool]:
    """Scale ``values`` to [0, 1] in float64.

    Returns:
        tuple: The normalized array and whether the input was constant (then all zeros)
    """
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi - lo <= 0.0:
        return np.zeros_like(values), True
    return (values - lo) / (hi - lo), False


def masks_from_features(feature_maps: np.ndarray, image_shape: tuple[int, int], cfg: SiduConfig) -> MaskSet:
    """Turn ``C x h x w`` activations into binary maps upsampled to ``image_shape``.

    Each map is min-max normalized (constant maps give all-zero masks), set to 1
    where the normalized value exceeds ``cfg.binarize_threshold`` and bilinearly
    interpolated with aligned corners, so source pixels land on exact grid points.
    """
    feature_maps = np.asarray(feature_maps)
    if feature_maps.ndim != 3:
        raise InputShapeError(f"Expected C x h x w feature maps, got shape {feature_maps.shape}")
    binary = np.zeros(feature_maps.shape, dtype=np.float32)
    for k, fmap in enumerate(feature_maps):
        normalized, constant = min_max_normalize(fmap)
        if not constant:
            binary[k] = normalized > cfg.binarize_threshold
    upsampled = F.interpolate(
        torch.from_numpy(binary).unsqueeze(0), size=tuple(image_shape), mode=cfg.upsample, align_corners=True
    )
    masks = upsampled.squeeze(0).clamp_(0.0, 1.0).numpy()
    c, h, w = feature_maps.shape
    return MaskSet(masks=masks, source_shape=(c, h, w))


def extract_masks(model: ModelSnapshot, image: np.ndarray, cfg: SiduConfig) -> MaskSet:
    """Build one mask per channel of the last conv block for ``image``.

    The unmasked prediction of the same pass is kept on the mask set.

    Raises:
        InputShapeError: If the image does not match the model input
    """
    image = check_images(model.arch, np.asarray(image)[None])
    predictions, features = forward_batch(model, image, batch_size=cfg.mask_batch_size, pad=True)
    masks = masks_from_features(features[0], (model.arch.input_height, model.arch.input_width), cfg)
    return masks.model_copy(update={"p_o": float(predictions[0])})


def masked_predictions(
    model: ModelSnapshot, image: np.ndarray, masks: MaskSet, cfg: SiduConfig | None = None
) -> MaskedPredictions:
    """Predict on ``image`` and on ``image * M_k`` for every mask.

    Masked images run in zero-padded batches of ``cfg.mask_batch_size``, the same
    shape as the unmasked pass, so an all-ones mask reproduces ``p_o`` exactly.
    Outputs keep channel order. ``masks.p_o`` is reused when present.

    Raises:
        InputShapeError: If the masks and the image differ in shape
    """
    cfg = cfg or SiduConfig()
    image = check_images(model.arch, np.asarray(image)[None])[0]
    if masks.image_shape != image.shape:
        raise InputShapeError(f"Masks of shape {masks.image_shape} do not match image {image.shape}")
    p_o = masks.p_o
    if p_o is None:
        unmasked, _ = forward_batch(model, image[None], batch_size=cfg.mask_batch_size, pad=True)
        p_o = float(unmasked[0])
    predictions, _ = forward_batch(model, image[None] * masks.masks, batch_size=cfg.mask_batch_size, pad=True)
    return MaskedPredictions(p_o=p_o, p_masked=predictions.astype(np.float64))


def similarity_difference(p_o: float, p_masked: np.ndarray, sd_sigma: float) -> np.ndarray:
    """``SD_k = exp(-(p_o - p_k)^2 / (2 sd_sigma^2))``, each in (0, 1]."""
    if sd_sigma <= 0:
        raise ValueError(f"sd_sigma must be > 0, got {sd_sigma}")
    delta = float(p_o) - np.asarray(p_masked, dtype=np.float64)
    return np.exp(-(delta**2) / (2.0 * sd_sigma**2))


def uniqueness(p_masked: np.ndarray) -> np.ndarray:
    """``U_k = sum_j |p_k - p_j|``.

    Raises:
        EmptyInputError: If there are no predictions
    """
    p = np.asarray(p_masked, dtype=np.float64)
    if p.size == 0:
        raise EmptyInputError("uniqueness needs at least one prediction")
    return np.abs(p[:, None] - p[None, :]).sum(axis=1)


def compose_heatmap(masks: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, bool]:
    """Weighted sum of masks, min-max normalized; constant maps become all zeros."""
    raw = np.tensordot(np.asarray(weights, dtype=np.float64), np.asarray(masks, dtype=np.float64), axes=1)
    return min_max_normalize(raw)


def explain(
    model: ModelSnapshot, image: np.ndarray, cfg: SiduConfig | None = None, model_tag: str | None = None
) -> Heatmap:
    """Compute the attribution heatmap of ``image`` under ``model``.

    Args:
        model: Snapshot to explain
        image: ``H x W`` input
        cfg: Attribution settings
        model_tag: Tag recorded on the heatmap, defaults to the snapshot tag

    Returns:
        Heatmap: Values in [0, 1]; all zeros and flagged degenerate when the
        weighted mask sum is constant

    Raises:
        InputShapeError: If the image does not match the model input
    """
    cfg = cfg or SiduConfig()
    masks = extract_masks(model, image, cfg)
    preds = masked_predictions(model, image, masks, cfg)
    sigma = cfg.sigma_for(preds.p_o)
    weights = similarity_difference(preds.p_o, preds.p_masked, sigma) * uniqueness(preds.p_masked)
    values, degenerate = compose_heatmap(masks.masks, weights)
    if degenerate:
        logger.warning(f"Degenerate heatmap for {model!r}: weighted mask sum is constant")
    return Heatmap(
        values=values.astype(np.float32),
        model_tag=model_tag if model_tag is not None else model.tag.value,
        metadata={
            "degenerate": degenerate,
            "sd_sigma": sigma,
            "sd_sigma_mode": cfg.sd_sigma_mode.value,
            "n_masks": len(masks),
            "p_o": preds.p_o,
        },
    )


def explain_batch(
    model: ModelSnapshot, images: np.ndarray, cfg: SiduConfig | None = None, model_tag: str | None = None
) -> list[Heatmap]:
    """Explain every image of an ``N x H x W`` stack, in order."""
    heatmaps = [explain(model, image, cfg, model_tag) for image in images]
    n_degenerate = sum(h.is_degenerate for h in heatmaps)
    logger.debug(f"Explained {len(heatmaps)} images under {model!r} ({n_degenerate} degenerate)")
    return heatmaps
