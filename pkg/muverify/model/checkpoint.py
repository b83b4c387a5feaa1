"""
Checkpoint codec: a JSON manifest plus a flat little-endian float32 blob.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from muverify.core.errors import ArtifactIOError
from muverify.model.arch import ArchConfig
from muverify.model.constants import (
    BLOB_DTYPE,
    CHECKPOINT_BLOB,
    CHECKPOINT_FORMAT_VERSION,
    CHECKPOINT_MANIFEST,
    ModelTag,
)
from muverify.model.snapshot import ModelSnapshot, TrainingHistory


def save_checkpoint(model: ModelSnapshot, directory: str | Path) -> Path:
    """Write ``checkpoint.json`` and ``checkpoint.bin`` into ``directory``.

    The manifest indexes every tensor by name, shape and byte offset into the blob;
    tensors are stored in layer order.

    Returns:
        Path: Path of the manifest

    Raises:
        ArtifactIOError: If the files cannot be written
    """
    directory = Path(directory)
    index: list[dict[str, Any]] = []
    chunks: list[bytes] = []
    offset = 0
    for name, value in model.weights.items():
        raw = np.ascontiguousarray(value, dtype=BLOB_DTYPE).tobytes()
        index.append({"name": name, "shape": list(value.shape), "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)

    manifest = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "dtype": BLOB_DTYPE,
        "arch": model.arch.model_dump(mode="json"),
        "tag": model.tag.value,
        "seed": model.seed,
        "init_scheme": model.init_scheme,
        "provenance": model.provenance,
        "history": model.history.model_dump(mode="json"),
        "digest": model.digest(),
        "tensors": index,
    }
    try:
        directory.mkdir(parents=True, exist_ok=True)
        (directory / CHECKPOINT_BLOB).write_bytes(b"".join(chunks))
        manifest_path = directory / CHECKPOINT_MANIFEST
        manifest_path.write_text(json.dumps(manifest, indent=2))
    except (OSError, TypeError) as e:
        raise ArtifactIOError(f"Failed to write checkpoint to {directory}: {e}") from e
    logger.debug(f"Saved {model!r} to {directory}")
    return manifest_path


def load_checkpoint(directory: str | Path) -> ModelSnapshot:
    """Read a checkpoint written by ``save_checkpoint``, bit-exactly.

    Raises:
        ArtifactIOError: If files are missing, truncated or fail the digest check
    """
    directory = Path(directory)
    try:
        manifest = json.loads((directory / CHECKPOINT_MANIFEST).read_text())
        blob = (directory / CHECKPOINT_BLOB).read_bytes()
    except (OSError, json.JSONDecodeError) as e:
        raise ArtifactIOError(f"Failed to read checkpoint from {directory}: {e}") from e

    if manifest.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ArtifactIOError(f"Unsupported checkpoint format {manifest.get('format_version')} in {directory}")

    weights: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        end = entry["offset"] + entry["nbytes"]
        if end > len(blob):
            raise ArtifactIOError(f"Checkpoint blob in {directory} is truncated at tensor {entry['name']}")
        values = np.frombuffer(blob, dtype=manifest["dtype"], count=entry["nbytes"] // 4, offset=entry["offset"])
        weights[entry["name"]] = values.reshape(entry["shape"]).astype(np.float32)

    model = ModelSnapshot(
        arch=ArchConfig.model_validate(manifest["arch"]),
        weights=weights,
        tag=ModelTag(manifest["tag"]),
        seed=manifest["seed"],
        init_scheme=manifest["init_scheme"],
        provenance=manifest["provenance"],
        history=TrainingHistory.model_validate(manifest["history"]),
    )
    if model.digest() != manifest["digest"]:
        raise ArtifactIOError(f"Checkpoint digest mismatch in {directory}")
    return model
