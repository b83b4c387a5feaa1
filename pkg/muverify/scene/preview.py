"""
Annotated previews of scenes, boxes coloured by class.
"""

from pathlib import Path

import numpy as np
from loguru import logger
from PIL import Image, ImageDraw

from muverify.core.errors import ArtifactIOError
from muverify.scene.constants import PREVIEW_DIR, PREVIEW_NAME_TEMPLATE, SplitTag
from muverify.scene.storage import load_dataset
from muverify.scene.types import SceneSample


def render_annotated_sample(sample: SceneSample, scale: int = 4) -> np.ndarray:
    """Draw the sample's boxes over its image.

    Human boxes are green, bicycle red, vehicle blue and motorcycle cyan.

    Args:
        sample: Scene to draw
        scale: Integer upscale factor applied before drawing

    Returns:
        np.ndarray: ``(H*scale) x (W*scale) x 3`` uint8 RGB image
    """
    gray = np.clip(np.rint(sample.image * 255.0), 0, 255).astype(np.uint8)
    height, width = gray.shape
    canvas = Image.fromarray(gray).convert("RGB").resize((width * scale, height * scale), Image.Resampling.NEAREST)
    draw = ImageDraw.Draw(canvas)
    for box in sample.boxes:
        # half-open box -> inclusive pixel corners
        draw.rectangle(
            [box.x0 * scale, box.y0 * scale, box.x1 * scale - 1, box.y1 * scale - 1],
            outline=box.object_class.color,
            width=1,
        )
    return np.asarray(canvas, dtype=np.uint8)


def write_previews(
    dataset_dir: str | Path, split: SplitTag = SplitTag.TRAIN, count: int = 8, scale: int = 4
) -> list[Path]:
    """Draw the first ``count`` samples of a saved split into ``dataset_dir/previews``.

    Args:
        dataset_dir: Directory written by ``save_dataset``
        split: Split to draw from
        count: Number of samples, capped at the split size
        scale: Integer upscale factor

    Returns:
        list[Path]: Written PNG paths, in sample order

    Raises:
        ArtifactIOError: If the dataset cannot be read or the previews cannot be written
    """
    dataset_dir = Path(dataset_dir)
    _, splits = load_dataset(dataset_dir)
    if split not in splits:
        raise ArtifactIOError(f"Split {split} not found in {dataset_dir}")
    preview_dir = dataset_dir / PREVIEW_DIR
    paths = []
    try:
        preview_dir.mkdir(parents=True, exist_ok=True)
        for index, sample in enumerate(splits[split].samples[:count]):
            path = preview_dir / PREVIEW_NAME_TEMPLATE.format(split=split.value, index=index)
            Image.fromarray(render_annotated_sample(sample, scale)).save(path)
            paths.append(path)
    except OSError as e:
        raise ArtifactIOError(f"Cannot write previews to {preview_dir}: {e}") from e
    logger.info(f"Wrote {len(paths)} {split} previews to {preview_dir}")
    return paths
