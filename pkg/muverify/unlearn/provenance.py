"""
Provenance records of unlearned snapshots.
"""

import json
from pathlib import Path
from typing import Any

from muverify.core.errors import ArtifactIOError
from muverify.model.snapshot import ModelSnapshot
from muverify.unlearn.constants import PROVENANCE_FILE


def provenance_record(model: ModelSnapshot, **context: Any) -> dict[str, Any]:
    """Method, seeds, fine-tune config, training data and perturbation statistics of a snapshot.

    Args:
        model: Snapshot to describe
        **context: JSON-serializable entries added to the record, such as the
            experiment settings the training data came from
    """
    record: dict[str, Any] = {
        "tag": model.tag.value,
        "init_seed": model.seed,
        "init_scheme": model.init_scheme,
        "digest": model.digest(),
        "epochs_trained": len(model.history.train_loss),
        "train_data_digest": model.provenance.get("train_data_digest"),
    }
    unlearning = model.provenance.get("unlearning")
    if unlearning is not None:
        method = unlearning["method"]
        record.update(
            {
                "method": method["tag"],
                "display_tag": unlearning["display_tag"],
                "fraction": method["fraction"],
                "sigma": method["sigma"],
                "granularity": method["granularity"],
                "scope": method["scope"],
                "perturbation_seed": method["seed"],
                "finetune": method["finetune_cfg"],
                "source_digest": unlearning["source_digest"],
                "pre_finetune": unlearning["perturbation"],
            }
        )
    else:
        record["train"] = model.provenance.get("train")
    record.update(context)
    return record


def write_provenance(model: ModelSnapshot, directory: str | Path, **context: Any) -> Path:
    """Write ``provenance.json`` next to a snapshot's checkpoint.

    Raises:
        ArtifactIOError: If the file cannot be written
    """
    path = Path(directory) / PROVENANCE_FILE
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(provenance_record(model, **context), indent=2))
    except OSError as e:
        raise ArtifactIOError(f"Failed to write {path}: {e}") from e
    return path
