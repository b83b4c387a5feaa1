"""
On-disk dataset layout: one 8-bit PNG per image, a JSON sidecar per split and a manifest.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger
from PIL import Image

from muverify.core.errors import ArtifactIOError
from muverify.scene.constants import DATASET_MANIFEST, IMAGE_NAME_TEMPLATE, ObjectClass, SplitTag
from muverify.scene.curation import label_histogram
from muverify.scene.types import BoundingBox, DatasetSplit, GenConfig, SceneSample


def _to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)


def _sample_entry(sample: SceneSample, filename: str) -> dict[str, Any]:
    return {
        "image": filename,
        "boxes": [box.to_list() for box in sample.boxes],
        "counts": {c.value: sample.counts[c] for c in ObjectClass},
        "label": sample.label,
    }


def save_split(split: DatasetSplit, directory: Path) -> Path:
    """Write the PNG images and the JSON sidecar of one split.

    Returns:
        Path: Path of the sidecar file
    """
    entries = []
    for index, sample in enumerate(split.samples):
        filename = IMAGE_NAME_TEMPLATE.format(split=split.split_tag.value, index=index)
        Image.fromarray(_to_uint8(sample.image)).save(directory / filename)
        entries.append(_sample_entry(sample, filename))
    sidecar = directory / f"{split.split_tag.value}.json"
    payload = {
        "split": split.split_tag.value,
        "generation_seed": split.generation_seed,
        "relabeled_for": [c.value for c in split.relabeled_for],
        "samples": entries,
    }
    sidecar.write_text(json.dumps(payload, indent=2))
    return sidecar


def save_dataset(splits: tuple[DatasetSplit, ...], config: GenConfig, directory: str | Path) -> Path:
    """Persist splits under ``directory`` with a ``manifest.json``.

    Args:
        splits: Splits to save, typically ``(train, val, test)``
        config: Generator config the splits were produced with
        directory: Target directory, created if missing

    Returns:
        Path: The manifest path

    Raises:
        ArtifactIOError: If the directory cannot be written
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        sidecars = {split.split_tag.value: save_split(split, directory).name for split in splits}
        manifest = {
            "gen_config": config.model_dump(mode="json"),
            "master_seed": config.master_seed,
            "seed_streams": {split.split_tag.value: split.split_tag.stream for split in splits},
            "splits": sidecars,
            "sizes": {split.split_tag.value: len(split) for split in splits},
            "label_histograms": {split.split_tag.value: label_histogram(split) for split in splits},
        }
        manifest_path = directory / DATASET_MANIFEST
        manifest_path.write_text(json.dumps(manifest, indent=2))
    except OSError as e:
        raise ArtifactIOError(f"Failed to save dataset to {directory}: {e}") from e
    logger.info(f"Saved dataset ({', '.join(f'{k}={v}' for k, v in manifest['sizes'].items())}) to {directory}")
    return manifest_path


def load_split(sidecar: Path) -> DatasetSplit:
    """Read one split back from its JSON sidecar and PNG images."""
    payload = json.loads(sidecar.read_text())
    samples = []
    for entry in payload["samples"]:
        with Image.open(sidecar.parent / entry["image"]) as img:
            image = np.asarray(img.convert("L"), dtype=np.float32) / 255.0
        samples.append(
            SceneSample(
                image=image,
                boxes=tuple(BoundingBox.from_list(b) for b in entry["boxes"]),
                counts={ObjectClass(k): int(v) for k, v in entry["counts"].items()},
                label=int(entry["label"]),
            )
        )
    return DatasetSplit(
        samples=tuple(samples),
        split_tag=SplitTag(payload["split"]),
        generation_seed=int(payload["generation_seed"]),
        relabeled_for=tuple(ObjectClass(c) for c in payload.get("relabeled_for", [])),
    )


def load_dataset(directory: str | Path) -> tuple[GenConfig, dict[SplitTag, DatasetSplit]]:
    """Load a dataset saved by :func:`save_dataset`.

    Images come back quantized to 8 bits; boxes, counts and labels are exact.

    Raises:
        ArtifactIOError: If the manifest or a sidecar is missing or unreadable
    """
    directory = Path(directory)
    manifest_path = directory / DATASET_MANIFEST
    if not manifest_path.exists():
        raise ArtifactIOError(f"Dataset manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
        config = GenConfig.model_validate(manifest["gen_config"])
        splits = {SplitTag(name): load_split(directory / sidecar) for name, sidecar in manifest["splits"].items()}
    except (OSError, KeyError, json.JSONDecodeError) as e:
        raise ArtifactIOError(f"Failed to load dataset from {directory}: {e}") from e
    return config, splits
