"""
Metrics report: one row per model per seed, cross-seed aggregates and the
directional findings, written as CSV, JSON and a plain-text table.
"""

import csv
import io
import json
import math
from collections.abc import Iterable
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from rich.console import Console
from rich.table import Table

from muverify.core.errors import ArtifactIOError
from muverify.model.constants import ModelTag
from muverify.orchestration.constants import (
    CURRENT_SCHEMA_VERSION,
    MAE_MARGIN,
    REPORT_CSV,
    REPORT_JSON,
    REPORT_TXT,
    RowKind,
)
from muverify.unlearn.constants import UnlearnTag
from muverify.xai.constants import STD_CONVENTION, ZeroMassPolicy

METRIC_COLUMNS = ("mae", "rmse", "r_hc", "h_hc", "attention_shift")
METRIC_TITLES = {"mae": "MAE", "rmse": "RMSE", "r_hc": "r-HC", "h_hc": "h-HC", "attention_shift": "AS"}
CSV_COLUMNS = (
    ["row_type", "seed", "model"]
    + [c for m in METRIC_COLUMNS for c in (m, f"{m}_std")]
    + ["n_eval", "r_hc_skipped", "h_hc_skipped"]
)
PERTURBING_METHODS = (UnlearnTag.PRUNE.value, UnlearnTag.REINIT.value, UnlearnTag.CONFUSE.value)


class MetricsRow(BaseModel):
    """Metrics of one model under one seed."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True, protected_namespaces=())

    seed: int = Field(description="Experiment seed")
    model: str = Field(description="Model display tag")
    mae: float = Field(description="MAE on the relabeled test split")
    rmse: float = Field(description="RMSE on the relabeled test split")
    r_hc: float | None = Field(default=None, description="Coverage of retained-class boxes")
    h_hc: float | None = Field(default=None, description="Coverage of forgotten-class boxes")
    attention_shift: float | None = Field(default=None, description="AS against the Original heatmaps")
    n_eval: int = Field(default=0, description="Explained test images")
    r_hc_skipped: int = Field(default=0, description="Samples dropped from r-HC")
    h_hc_skipped: int = Field(default=0, description="Samples dropped from h-HC")


class AggregateRow(BaseModel):
    """Cross-seed mean and population std of one model's metrics."""

    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    model: str = Field(description="Model display tag")
    n_seeds: int = Field(description="Seeds with a row for this model")
    mean: dict[str, float | None] = Field(description="Mean per metric; None when no seed has a value")
    std: dict[str, float | None] = Field(description="Population std per metric")


class SeedVerdict(BaseModel):
    """Outcome of one criterion under one seed."""

    model_config = ConfigDict(extra="forbid")

    seed: int
    values: dict[str, float | None] = Field(default_factory=dict)
    passed: bool


class Criterion(BaseModel):
    """A directional finding checked across seeds."""

    model_config = ConfigDict(extra="forbid")

    name: str
    description: str
    required: int = Field(description="Seeds that must pass")
    verdicts: list[SeedVerdict] = Field(default_factory=list)

    @property
    def n_passed(self) -> int:
        return sum(v.passed for v in self.verdicts)

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and self.n_passed >= self.required


class MetricsReport(BaseModel):
    """Full experiment report."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    schema_version: str = Field(default=CURRENT_SCHEMA_VERSION)
    config: dict[str, Any] = Field(default_factory=dict, description="Experiment config the report came from")
    rows: list[MetricsRow] = Field(default_factory=list, description="One row per model per seed")
    aggregates: list[AggregateRow] = Field(default_factory=list, description="One row per model")
    std_convention: str = Field(default=STD_CONVENTION, description="Std used by AS and the aggregates")
    zero_mass_policy: ZeroMassPolicy = Field(default=ZeroMassPolicy.SKIP)
    findings: list[Criterion] = Field(default_factory=list, description="Directional findings")

    @classmethod
    def build(cls, rows: Iterable[MetricsRow], config: dict[str, Any] | None = None, **kwargs) -> "MetricsReport":
        """Assemble a report, computing aggregates and findings from ``rows``."""
        report = cls(config=config or {}, rows=list(rows), **kwargs)
        report.aggregates = aggregate_rows(report.rows)
        report.findings = check_directional_findings(report)
        return report

    def models(self) -> list[str]:
        """Model tags in first-appearance order."""
        return list(dict.fromkeys(row.model for row in self.rows))

    def seeds(self) -> list[int]:
        return list(dict.fromkeys(row.seed for row in self.rows))

    def row(self, seed: int, model: str) -> MetricsRow | None:
        return next((r for r in self.rows if r.seed == seed and r.model == model), None)


def _mean_std(values: list[float | None]) -> tuple[float | None, float | None]:
    present = np.asarray([v for v in values if v is not None], dtype=np.float64)
    if present.size == 0:
        return None, None
    return float(present.mean()), float(present.std(ddof=0))


def aggregate_rows(rows: list[MetricsRow]) -> list[AggregateRow]:
    """Per-model mean and population std across seeds, ignoring missing values."""
    aggregates = []
    for model in dict.fromkeys(row.model for row in rows):
        model_rows = [row for row in rows if row.model == model]
        mean, std = {}, {}
        for metric in METRIC_COLUMNS:
            mean[metric], std[metric] = _mean_std([getattr(row, metric) for row in model_rows])
        aggregates.append(AggregateRow(model=model, n_seeds=len(model_rows), mean=mean, std=std))
    return aggregates


def _required(n_seeds: int) -> int:
    # "2 of 3" generalized to two thirds of the seeds
    return max(1, math.ceil(2 * n_seeds / 3))


def check_directional_findings(report: MetricsReport) -> list[Criterion]:
    """Check the qualitative findings per seed.

    - ``mae_margin``: Original's MAE exceeds every unlearned model's MAE by at least 30% (every seed)
    - ``h_hc_reduction:<method>``: Prune, Reinit and Confuse attend less to the forgotten class than Original
    - ``as_retrain_ge_finetune``: Retrain shifts attention at least as much as Finetune
    """
    seeds = report.seeds()
    original, retrain, finetune = ModelTag.ORIGINAL.value, ModelTag.RETRAIN.value, ModelTag.FINETUNE.value
    unlearned = [m for m in report.models() if m not in (original, retrain)]
    if not seeds or original not in report.models():
        return []

    margin = Criterion(
        name="mae_margin",
        description=f"Original MAE >= {MAE_MARGIN:g} x every unlearned model's MAE",
        required=len(seeds),
    )
    for seed in seeds:
        base = report.row(seed, original)
        others = [r for r in (report.row(seed, m) for m in unlearned) if r is not None]
        worst = max((r.mae for r in others), default=None)
        passed = base is not None and worst is not None and base.mae >= MAE_MARGIN * worst
        values = {"original": base.mae if base else None, "worst_unlearned": worst}
        margin.verdicts.append(SeedVerdict(seed=seed, values=values, passed=passed))
    findings = [margin] if unlearned else []

    for method in (m for m in unlearned if m in PERTURBING_METHODS):
        criterion = Criterion(
            name=f"h_hc_reduction:{method}",
            description=f"h-HC of {method} below Original's",
            required=_required(len(seeds)),
        )
        for seed in seeds:
            base, row = report.row(seed, original), report.row(seed, method)
            values = {"original": base.h_hc if base else None, method: row.h_hc if row else None}
            passed = None not in values.values() and values[method] < values["original"]
            criterion.verdicts.append(SeedVerdict(seed=seed, values=values, passed=passed))
        findings.append(criterion)

    if finetune in report.models() and retrain in report.models():
        criterion = Criterion(
            name="as_retrain_ge_finetune",
            description="AS(Retrain, Original) >= AS(Finetune, Original)",
            required=_required(len(seeds)),
        )
        for seed in seeds:
            r, f = report.row(seed, retrain), report.row(seed, finetune)
            values = {retrain: r.attention_shift if r else None, finetune: f.attention_shift if f else None}
            passed = None not in values.values() and values[retrain] >= values[finetune]
            criterion.verdicts.append(SeedVerdict(seed=seed, values=values, passed=passed))
        findings.append(criterion)

    for criterion in findings:
        logger.info(f"Finding {criterion.name}: {criterion.n_passed}/{len(seeds)} seeds, passed={criterion.passed}")
    return findings


def _cell(value: float | int | None) -> str:
    return "" if value is None else repr(value)


def report_to_csv(report: MetricsReport) -> str:
    """Per-seed rows followed by one aggregate row per model."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.rows:
        metrics = [c for m in METRIC_COLUMNS for c in (_cell(getattr(row, m)), "")]
        counts = [row.n_eval, row.r_hc_skipped, row.h_hc_skipped]
        writer.writerow([RowKind.SEED.value, row.seed, row.model, *metrics, *counts])
    for agg in report.aggregates:
        metrics = [c for m in METRIC_COLUMNS for c in (_cell(agg.mean[m]), _cell(agg.std[m]))]
        writer.writerow([RowKind.AGGREGATE.value, "", agg.model, *metrics, "", "", ""])
    return buffer.getvalue()


def _fmt(value: float | None, std: float | None = None) -> str:
    if value is None:
        return "-"
    if std is None:
        return f"{value:.4g}"
    return f"{value:.4g} ± {std:.2g}"


def report_to_text(report: MetricsReport) -> str:
    """Render the report as a plain-text table."""
    table = Table(title="Unlearning verification report")
    table.add_column("Seed")
    table.add_column("Model")
    for metric in METRIC_COLUMNS:
        table.add_column(METRIC_TITLES[metric], justify="right")
    for row in report.rows:
        table.add_row(str(row.seed), row.model, *(_fmt(getattr(row, m)) for m in METRIC_COLUMNS))
    for agg in report.aggregates:
        table.add_row("all", agg.model, *(_fmt(agg.mean[m], agg.std[m]) for m in METRIC_COLUMNS), style="bold")

    buffer = io.StringIO()
    console = Console(file=buffer, width=140, color_system=None)
    console.print(table)
    for criterion in report.findings:
        verdict = "PASS" if criterion.passed else "FAIL"
        line = f"[{verdict}] {criterion.description}: {criterion.n_passed}/{len(criterion.verdicts)} seeds"
        console.print(line, markup=False)
    console.print(f"AS std convention: {report.std_convention}; HC zero-mass policy: {report.zero_mass_policy}")
    return buffer.getvalue()


def write_report(report: MetricsReport, output_dir: str | Path) -> dict[str, Path]:
    """Write ``report.csv``, ``report.json`` and ``report.txt``.

    Raises:
        ArtifactIOError: If the directory is not writable
    """
    output_dir = Path(output_dir)
    paths = {"csv": output_dir / REPORT_CSV, "json": output_dir / REPORT_JSON, "txt": output_dir / REPORT_TXT}
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        paths["csv"].write_text(report_to_csv(report))
        paths["json"].write_text(json.dumps(report.model_dump(mode="json"), indent=2))
        paths["txt"].write_text(report_to_text(report))
    except OSError as e:
        raise ArtifactIOError(f"Cannot write report to {output_dir}: {e}") from e
    logger.info(f"Report written to {output_dir}")
    return paths


def load_report(path: str | Path) -> MetricsReport:
    """Read a ``report.json``.

    Raises:
        ArtifactIOError: If the file is missing
    """
    path = Path(path)
    if not path.exists():
        raise ArtifactIOError(f"Report not found: {path}")
    return MetricsReport.model_validate_json(path.read_text())
