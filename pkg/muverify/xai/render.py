"""
PNG renderings of heatmaps: colormap overlays, attention differences and model panels.
"""

import io
from collections.abc import Mapping
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from PIL import Image

from muverify.core.errors import ArtifactIOError, InputShapeError
from muverify.xai.constants import DIFF_EPSILON, HEATMAP_COLORMAP, OVERLAY_MAX_ALPHA, OVERLAY_MIN_ALPHA
from muverify.xai.sidu import Heatmap


def _raw(heatmap: Heatmap | np.ndarray) -> np.ndarray:
    values = heatmap.values if isinstance(heatmap, Heatmap) else np.asarray(heatmap, dtype=np.float32)
    return values.astype(np.float64)


def _values(heatmap: Heatmap | np.ndarray) -> np.ndarray:
    return np.clip(_raw(heatmap), 0.0, 1.0)


def _check_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise InputShapeError(f"{what}: shapes {a.shape} and {b.shape} differ")


def to_png_bytes(rgb: np.ndarray) -> bytes:
    """Encode an ``H x W x 3`` uint8 array as PNG."""
    buffer = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8)).save(buffer, format="PNG")
    return buffer.getvalue()


def colorize(heatmap: Heatmap | np.ndarray, colormap: str = HEATMAP_COLORMAP) -> np.ndarray:
    """Map heatmap values through ``colormap``, least important blue, most red.

    Returns:
        np.ndarray: ``H x W x 3`` float64 RGB in [0, 1]
    """
    return matplotlib.colormaps[colormap](_values(heatmap))[..., :3]


def overlay_rgb(
    image: np.ndarray,
    heatmap: Heatmap | np.ndarray,
    min_alpha: float = OVERLAY_MIN_ALPHA,
    max_alpha: float = OVERLAY_MAX_ALPHA,
    colormap: str = HEATMAP_COLORMAP,
) -> np.ndarray:
    """Blend the colorized heatmap over the grayscale image.

    The blend weight grows linearly with the heatmap value from ``min_alpha`` to
    ``max_alpha``.

    Returns:
        np.ndarray: ``H x W x 3`` uint8 RGB

    Raises:
        InputShapeError: If the image and heatmap differ in shape
    """
    gray = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    values = _values(heatmap)
    _check_same_shape(gray, values, "overlay")
    alpha = (min_alpha + (max_alpha - min_alpha) * values)[..., None]
    blended = (1.0 - alpha) * gray[..., None] + alpha * colorize(values, colormap)
    return np.clip(np.rint(blended * 255.0), 0, 255).astype(np.uint8)


def render_overlay(image: np.ndarray, heatmap: Heatmap | np.ndarray, **kwargs) -> bytes:
    """PNG of :func:`overlay_rgb`."""
    return to_png_bytes(overlay_rgb(image, heatmap, **kwargs))


def attention_diff_rgb(
    h_original: Heatmap | np.ndarray, h_unlearned: Heatmap | np.ndarray, epsilon: float = DIFF_EPSILON
) -> np.ndarray:
    """Color the change ``D = h_unlearned - h_original`` per pixel.

    Increases above ``epsilon`` fade from white to green with ``|D|``, decreases
    below ``-epsilon`` fade to red, everything else stays white. ``D`` is taken on
    the raw values; only the colour intensity saturates at ``|D| = 1``.

    Returns:
        np.ndarray: ``H x W x 3`` uint8 RGB

    Raises:
        InputShapeError: If the heatmaps differ in shape
    """
    original, unlearned = _raw(h_original), _raw(h_unlearned)
    _check_same_shape(original, unlearned, "attention diff")
    diff = unlearned - original
    fade = np.where(np.abs(diff) > epsilon, 1.0 - np.minimum(np.abs(diff), 1.0), 1.0)
    rgb = np.ones(diff.shape + (3,), dtype=np.float64)
    increased, decreased = diff > epsilon, diff < -epsilon
    # green keeps G at 1 and fades R and B; red keeps R and fades G and B
    rgb[..., 0] = np.where(increased, fade, 1.0)
    rgb[..., 1] = np.where(decreased, fade, 1.0)
    rgb[..., 2] = fade
    return np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)


def render_attention_diff(
    h_original: Heatmap | np.ndarray, h_unlearned: Heatmap | np.ndarray, epsilon: float = DIFF_EPSILON
) -> bytes:
    """PNG of :func:`attention_diff_rgb`."""
    return to_png_bytes(attention_diff_rgb(h_original, h_unlearned, epsilon))


def render_heatmap_panel(image: np.ndarray, heatmaps_by_model: Mapping[str, Heatmap], path: str | Path) -> Path:
    """Write a one-row figure: the input image, then one overlay per model.

    Raises:
        ArtifactIOError: If the figure cannot be written
    """
    path = Path(path)
    n = 1 + len(heatmaps_by_model)
    fig = Figure(figsize=(2.2 * n, 2.4))
    axes = fig.subplots(1, n, squeeze=False)[0]
    axes[0].imshow(np.asarray(image), cmap="gray", vmin=0.0, vmax=1.0)
    axes[0].set_title("input", fontsize=9)
    for ax, (tag, heatmap) in zip(axes[1:], heatmaps_by_model.items(), strict=True):
        ax.imshow(overlay_rgb(image, heatmap))
        ax.set_title(tag, fontsize=9)
    for ax in axes:
        ax.set_axis_off()
    fig.tight_layout()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="png", dpi=100)
    except OSError as e:
        raise ArtifactIOError(f"Cannot write heatmap panel {path}: {e}") from e
    return path
