"""
Experiment configuration.

One file describes a whole run: the generator, the architecture, both training
schedules, the unlearning methods, attribution settings and the seeds. Files are
JSON or YAML and carry a ``schema_version``.
"""

import json
from collections import Counter
from pathlib import Path
from typing import Any

import yaml
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from muverify.core.errors import ConfigurationError
from muverify.model.arch import ArchConfig, TrainConfig
from muverify.orchestration.constants import CURRENT_SCHEMA_VERSION, SUPPORTED_SCHEMA_VERSIONS
from muverify.scene.constants import ObjectClass
from muverify.scene.types import GenConfig
from muverify.unlearn.constants import UnlearnTag
from muverify.unlearn.method import UnlearnMethod, sigma_sweep
from muverify.xai.constants import ZeroMassPolicy
from muverify.xai.sidu import SiduConfig


def _default_methods() -> list[UnlearnMethod]:
    return [UnlearnMethod(tag=tag) for tag in UnlearnTag]


class ExperimentConfig(BaseModel):
    """Top-level configuration of an unlearning experiment."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    schema_version: str = Field(default=CURRENT_SCHEMA_VERSION, description="Config schema version")
    name: str = Field(default="desk-scale", description="Experiment name")
    gen: GenConfig = Field(default_factory=GenConfig, description="Synthetic data; master_seed is set per seed")
    arch: ArchConfig = Field(default_factory=ArchConfig, description="Counting CNN architecture")
    train_original: TrainConfig = Field(default_factory=lambda: TrainConfig(epochs=10), description="Original on D")
    train_retrain: TrainConfig = Field(default_factory=lambda: TrainConfig(epochs=10), description="Retrain on D'")
    unlearn_methods: list[UnlearnMethod] = Field(default_factory=_default_methods, description="Methods to run")
    confuse_sigma_sweep: bool = Field(default=False, description="Add confuse@sigma rows for the sigma sweep")
    forget_class: ObjectClass = Field(default=ObjectClass.HUMAN, description="Class removed from the labels")
    sidu: SiduConfig = Field(default_factory=SiduConfig, description="Attribution settings")
    zero_mass_policy: ZeroMassPolicy = Field(default=ZeroMassPolicy.SKIP, description="All-zero heatmaps in HC")
    eval_sample_count: int = Field(default=100, ge=1, description="Test images explained per model")
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2], description="Experiment seeds")
    output_dir: Path = Field(default=Path("muverify_out"), description="Root of all artifacts")
    render_panels: bool = Field(default=True, description="Write model comparison panels and diff images")

    @field_validator("schema_version")
    @classmethod
    def _validate_schema_version(cls, v: str) -> str:
        if v not in SUPPORTED_SCHEMA_VERSIONS:
            raise ValueError(f"Unsupported schema_version: {v}")
        return v

    @classmethod
    def default(cls) -> "ExperimentConfig":
        """The desk-scale configuration: 64x64 scenes, 2000/300/300 samples, three seeds."""
        return cls()

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        """Create a configuration from parsed file contents.

        Raises:
            ConfigurationError: On unknown top-level keys or invalid values
        """
        if not isinstance(data, dict):
            raise ConfigurationError(f"Experiment config must be a mapping, got {type(data).__name__}")
        unknown = sorted(set(data) - set(cls.model_fields))
        if unknown:
            raise ConfigurationError(f"Syntax error: invalid keyword(s) {unknown}")
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid experiment config:\n{e}") from e

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        """Read a JSON or YAML configuration file.

        Raises:
            FileNotFoundError: If the file does not exist
            ConfigurationError: If the file cannot be parsed or is invalid
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Config file not found: {path}")
        try:
            data = yaml.safe_load(path.read_text())
        except yaml.YAMLError as e:
            logger.exception(f"Failed to parse {path}")
            raise ConfigurationError(f"Cannot parse {path}: {e}") from e
        config = cls.from_dict(data)
        logger.info(f"Loaded experiment config {config.name!r} from {path}")
        return config

    def to_dict(self) -> dict[str, Any]:
        return self.model_dump(mode="json")

    def to_file(self, path: str | Path) -> Path:
        """Write the configuration as JSON."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2))
        return path

    def with_overrides(self, seed: int | None = None, output_dir: str | Path | None = None) -> "ExperimentConfig":
        """Apply the command-line ``--seed`` and ``--out`` overrides."""
        update: dict[str, Any] = {}
        if seed is not None:
            update["seeds"] = [seed]
        if output_dir is not None:
            update["output_dir"] = Path(output_dir)
        return self.model_copy(update=update)

    def gen_for_seed(self, seed: int) -> GenConfig:
        return self.gen.model_copy(update={"master_seed": seed})

    def seed_dir(self, seed: int) -> Path:
        return self.output_dir / str(seed)

    def expanded_methods(self) -> list[UnlearnMethod]:
        """Configured methods, plus ``confuse@sigma`` variants when the sweep is on."""
        methods = list(self.unlearn_methods)
        if self.confuse_sigma_sweep:
            for method in self.unlearn_methods:
                if method.tag == UnlearnTag.CONFUSE:
                    methods.extend(sigma_sweep(method))
        return methods

    def _collect_verification_errors(self) -> list[str]:
        errors = []
        if not self.seeds:
            errors.append("at least one seed is required")
        duplicates = [s for s, n in Counter(self.seeds).items() if n > 1]
        if duplicates:
            errors.append(f"duplicate seeds: {duplicates}")
        if self.eval_sample_count > self.gen.split_sizes.test:
            errors.append(
                f"eval_sample_count {self.eval_sample_count} exceeds the test split size {self.gen.split_sizes.test}"
            )
        tags = [m.display_tag for m in self.expanded_methods()]
        repeated = [t for t, n in Counter(tags).items() if n > 1]
        if repeated:
            errors.append(f"duplicate unlearning methods: {repeated}")
        if (self.arch.input_height, self.arch.input_width) != (self.gen.image_height, self.gen.image_width):
            errors.append(
                f"model input {self.arch.input_height}x{self.arch.input_width} does not match "
                f"generated images {self.gen.image_height}x{self.gen.image_width}"
            )
        for check in (self.arch.verify, self.gen.verify):
            try:
                check()
            except ConfigurationError as e:
                errors.append(str(e))
        return errors

    def verify(self) -> bool:
        """Verify cross-field invariants.

        Raises:
            ConfigurationError: With every violated invariant listed
        """
        errors = self._collect_verification_errors()
        if errors:
            raise ConfigurationError("semantic check failed:\n" + "\n".join(errors))
        return True
