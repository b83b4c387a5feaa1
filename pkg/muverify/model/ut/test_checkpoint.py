"""Unit tests for the checkpoint codec."""

import json
from pathlib import Path

import numpy as np
import pytest

from muverify.core.errors import ArtifactIOError
from muverify.model.arch import TrainConfig
from muverify.model.checkpoint import load_checkpoint, save_checkpoint
from muverify.model.constants import CHECKPOINT_BLOB, ModelTag
from muverify.model.snapshot import ModelSnapshot
from muverify.model.trainer import train
from muverify.scene.types import DatasetSplit


def test_round_trip_is_bit_exact(tiny_model: ModelSnapshot, tiny_train: DatasetSplit, tmp_path: Path):
    """Test weights, tag, seed, history and provenance survive save/load unchanged."""
    trained = train(tiny_model, tiny_train, TrainConfig(epochs=1, batch_size=10), tag=ModelTag.RETRAIN)
    save_checkpoint(trained, tmp_path)
    loaded = load_checkpoint(tmp_path)
    assert loaded.same_weights(trained)
    assert loaded.digest() == trained.digest()
    assert loaded.tag == ModelTag.RETRAIN
    assert loaded.seed == trained.seed
    assert loaded.arch == trained.arch
    assert loaded.history == trained.history
    assert loaded.provenance == trained.provenance


def test_manifest_indexes_little_endian_blob(tiny_model: ModelSnapshot, tmp_path: Path):
    """Test tensors are stored in manifest order as little-endian float32 at their offsets."""
    manifest = json.loads(save_checkpoint(tiny_model, tmp_path).read_text())
    blob = (tmp_path / CHECKPOINT_BLOB).read_bytes()
    assert len(blob) == 4 * tiny_model.num_parameters()
    assert [t["name"] for t in manifest["tensors"]] == list(tiny_model.weights)
    entry = manifest["tensors"][2]
    raw = np.frombuffer(blob[entry["offset"] : entry["offset"] + entry["nbytes"]], dtype="<f4")
    assert np.array_equal(raw.reshape(entry["shape"]), tiny_model.weights[entry["name"]])
    assert manifest["tag"] == "original"


def test_missing_checkpoint_raises(tmp_path: Path):
    """Test loading from an empty directory is an I/O error."""
    with pytest.raises(ArtifactIOError):
        load_checkpoint(tmp_path)


def test_corrupted_blob_fails_digest(tiny_model: ModelSnapshot, tmp_path: Path):
    """Test a flipped byte in the blob is detected."""
    save_checkpoint(tiny_model, tmp_path)
    blob = bytearray((tmp_path / CHECKPOINT_BLOB).read_bytes())
    blob[0] ^= 0xFF
    (tmp_path / CHECKPOINT_BLOB).write_bytes(bytes(blob))
    with pytest.raises(ArtifactIOError, match="digest"):
        load_checkpoint(tmp_path)


def test_truncated_blob_raises(tiny_model: ModelSnapshot, tmp_path: Path):
    """Test a short blob is reported as truncated."""
    save_checkpoint(tiny_model, tmp_path)
    blob = (tmp_path / CHECKPOINT_BLOB).read_bytes()
    (tmp_path / CHECKPOINT_BLOB).write_bytes(blob[:-8])
    with pytest.raises(ArtifactIOError, match="truncated"):
        load_checkpoint(tmp_path)
