"""
Heatmap files: raw row-major float32 with a JSON header, plus a PNG rendering.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np

from muverify.core.errors import ArtifactIOError
from muverify.xai.constants import HEATMAP_HEADER_SUFFIX, HEATMAP_PNG_SUFFIX, HEATMAP_RAW_SUFFIX
from muverify.xai.render import colorize, to_png_bytes
from muverify.xai.sidu import Heatmap, SiduConfig

RAW_DTYPE = "<f4"


def save_heatmap(heatmap: Heatmap, stem: str | Path, cfg: SiduConfig | None = None) -> Path:
    """Write ``{stem}.f32`` and ``{stem}.json``.

    Returns:
        Path: Path of the raw file

    Raises:
        ArtifactIOError: If the files cannot be written
    """
    stem = Path(stem)
    raw_path, header_path = stem.with_suffix(HEATMAP_RAW_SUFFIX), stem.with_suffix(HEATMAP_HEADER_SUFFIX)
    header: dict[str, Any] = {
        "shape": list(heatmap.shape),
        "dtype": RAW_DTYPE,
        "model_tag": heatmap.model_tag,
        "metadata": heatmap.metadata,
        "config": cfg.model_dump(mode="json") if cfg is not None else None,
    }
    try:
        stem.parent.mkdir(parents=True, exist_ok=True)
        raw_path.write_bytes(np.ascontiguousarray(heatmap.values, dtype=RAW_DTYPE).tobytes())
        header_path.write_text(json.dumps(header, indent=2))
    except OSError as e:
        raise ArtifactIOError(f"Cannot write heatmap {stem}: {e}") from e
    return raw_path


def load_heatmap(stem: str | Path) -> Heatmap:
    """Read a heatmap written by :func:`save_heatmap`; values round-trip bit-exactly.

    Raises:
        ArtifactIOError: If a file is missing or the raw size does not match the header
    """
    stem = Path(stem)
    raw_path, header_path = stem.with_suffix(HEATMAP_RAW_SUFFIX), stem.with_suffix(HEATMAP_HEADER_SUFFIX)
    if not raw_path.exists() or not header_path.exists():
        raise ArtifactIOError(f"Heatmap files for {stem} are missing")
    header = json.loads(header_path.read_text())
    raw = raw_path.read_bytes()
    shape = tuple(header["shape"])
    if len(raw) != int(np.prod(shape)) * np.dtype(header.get("dtype", RAW_DTYPE)).itemsize:
        raise ArtifactIOError(f"Heatmap {raw_path} holds {len(raw)} bytes, expected shape {shape}")
    values = np.frombuffer(raw, dtype=header.get("dtype", RAW_DTYPE)).reshape(shape).astype(np.float32)
    return Heatmap(values=values, model_tag=header["model_tag"], metadata=header["metadata"])


def save_heatmap_png(heatmap: Heatmap, path: str | Path) -> Path:
    """Write the heatmap through the blue-to-red colormap as an 8-bit PNG."""
    path = Path(path).with_suffix(HEATMAP_PNG_SUFFIX)
    rgb = np.clip(np.rint(colorize(heatmap) * 255.0), 0, 255).astype(np.uint8)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(to_png_bytes(rgb))
    except OSError as e:
        raise ArtifactIOError(f"Cannot write {path}: {e}") from e
    return path
