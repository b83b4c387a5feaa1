"""
Experiment manager

Runs the stage graph of an ExperimentConfig once per seed, keeps the
execution status of every node and writes the metrics report.
"""

import json
import time
from collections.abc import Callable, Iterable
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from muverify.core.determinism import deterministic_torch, make_rng
from muverify.core.errors import ArtifactIOError, UndefinedMetricError
from muverify.model.checkpoint import load_checkpoint, save_checkpoint
from muverify.model.constants import CHECKPOINT_MANIFEST, ModelTag
from muverify.model.functional import init_model
from muverify.model.snapshot import ModelSnapshot
from muverify.model.trainer import evaluate_regression, train
from muverify.orchestration.constants import (
    DATA_DIR,
    DIFF_DIR,
    EVAL_SUBSET_STREAM,
    HEATMAP_DIR,
    HEATMAP_STEM_TEMPLATE,
    PANEL_DIR,
    PANEL_SAMPLE_COUNT,
    PARTIAL_REPORT,
    ExecutionStatus,
    PipelineStage,
)
from muverify.orchestration.dag_manager import StageDAGManager
from muverify.orchestration.experiment_config import ExperimentConfig
from muverify.orchestration.report import MetricsReport, MetricsRow, write_report
from muverify.scene.constants import ObjectClass
from muverify.scene.curation import rebalance, relabel
from muverify.scene.generator import generate_dataset
from muverify.scene.storage import save_dataset
from muverify.scene.types import DatasetSplit
from muverify.unlearn.constants import PROVENANCE_FILE
from muverify.unlearn.methods import run_unlearning
from muverify.unlearn.provenance import write_provenance
from muverify.xai.constants import MetricName
from muverify.xai.metrics import MetricResult, attention_shift, class_coverage
from muverify.xai.render import render_attention_diff, render_heatmap_panel
from muverify.xai.sidu import Heatmap, explain_batch
from muverify.xai.storage import save_heatmap, save_heatmap_png


class ExecutionNode(BaseModel):
    """One stage node of one seed."""

    name: str
    seed: int
    node: str = Field(description="Node name in the stage graph")
    stage: PipelineStage
    status: ExecutionStatus = ExecutionStatus.PENDING
    start_time: float | None = None
    end_time: float | None = None
    error_message: str | None = None


class SeedState(BaseModel):
    """In-memory artifacts of one seed, filled stage by stage."""

    model_config = ConfigDict(arbitrary_types_allowed=True, protected_namespaces=())

    seed: int
    splits: dict[str, DatasetSplit] = Field(default_factory=dict, description="train/val/test")
    curated: dict[str, DatasetSplit] = Field(default_factory=dict, description="Relabeled train/val/test")
    models: dict[str, ModelSnapshot] = Field(default_factory=dict, description="Snapshots by display tag")
    eval_indices: list[int] = Field(default_factory=list, description="Test indices that get explained")
    heatmaps: dict[str, list[Heatmap]] = Field(default_factory=dict, description="Heatmaps by display tag")
    rows: list[MetricsRow] = Field(default_factory=list)


def eval_subset(seed: int, n_test: int, count: int) -> list[int]:
    """Seeded, sorted sample of ``count`` test indices without replacement."""
    chosen = make_rng((seed, EVAL_SUBSET_STREAM)).choice(n_test, size=min(count, n_test), replace=False)
    return sorted(int(i) for i in chosen)


def _matches(record: dict[str, Any], expected: dict[str, Any]) -> bool:
    # compare in JSON form: tuples become lists and enum keys become strings
    expected = json.loads(json.dumps(expected))
    return all(record.get(key) == value for key, value in expected.items())


class ExperimentManager:
    """Experiment manager based on ExperimentConfig

    Main features:
    1. Build the stage plan from the StageDAGManager
    2. Run the plan seed by seed in topological order
    3. Persist data, checkpoints, heatmaps and renderings under ``output_dir/{seed}``
    4. Flush a partial report and re-raise when a stage fails
    """

    def __init__(self, config: ExperimentConfig, reuse_checkpoints: bool = False):
        """Initialize the experiment manager

        Args:
            config: Experiment configuration
            reuse_checkpoints: Load trained and unlearned snapshots from disk when their
                provenance matches the configuration instead of training them again
        """
        self.config = config
        self.reuse_checkpoints = reuse_checkpoints
        self.dag_manager = StageDAGManager(config)
        self.execution_nodes: dict[str, ExecutionNode] = {}
        self.execution_plan: list[str] = []
        self.execution_history: list[dict[str, Any]] = []
        self.states: dict[int, SeedState] = {}
        self.report: MetricsReport | None = None

        self._validate_config()
        self._stage_runners: dict[PipelineStage, Callable[[SeedState, str], None]] = {
            PipelineStage.GENERATE: self._run_generate,
            PipelineStage.TRAIN_ORIGINAL: self._run_train_original,
            PipelineStage.RELABEL: self._run_relabel,
            PipelineStage.TRAIN_RETRAIN: self._run_train_retrain,
            PipelineStage.UNLEARN: self._run_unlearn,
            PipelineStage.EXPLAIN: self._run_explain,
            PipelineStage.EVALUATE: self._run_evaluate,
            PipelineStage.REPORT: self._run_report,
        }

    def _validate_config(self) -> None:
        try:
            self.config.verify()
            logger.info("Configuration validation passed")
        except Exception as e:
            logger.error(f"Configuration validation failed: {e}")
            raise

    def _init_execution_nodes(self, until: PipelineStage | None) -> None:
        plan = self.dag_manager.generate_execution_plan(until)
        self.execution_nodes.clear()
        self.execution_plan = []
        for seed in self.config.seeds:
            for node in plan:
                name = f"{seed}/{node}"
                self.execution_nodes[name] = ExecutionNode(
                    name=name, seed=seed, node=node, stage=self.dag_manager.stage_of(node)
                )
                self.execution_plan.append(name)
        logger.info(f"Execution plan: {len(self.execution_plan)} nodes over seeds {self.config.seeds}")

    def _can_execute_node(self, name: str) -> bool:
        node = self.execution_nodes[name]
        for dep in self.dag_manager.dependencies(node.node):
            dep_node = self.execution_nodes.get(f"{node.seed}/{dep}")
            if dep_node is None or dep_node.status != ExecutionStatus.SUCCESS:
                return False
        return True

    def model_dir(self, seed: int, tag: str) -> Path:
        return self.config.seed_dir(seed) / tag

    # stage runners

    def _run_generate(self, state: SeedState, node: str) -> None:
        gen = self.config.gen_for_seed(state.seed)
        train_split, val, test = generate_dataset(gen)
        save_dataset((train_split, val, test), gen, self.config.seed_dir(state.seed) / DATA_DIR)
        if gen.rebalance.enabled:
            cfg = gen.rebalance
            train_split = rebalance(
                train_split,
                cfg.hi_percentile,
                cfg.lo_percentile,
                seed=state.seed,
                keep_probability=cfg.keep_probability,
                duplication_factor=cfg.duplication_factor,
            )
        state.splits = {"train": train_split, "val": val, "test": test}

    def _load_reusable(self, directory: Path, expected: dict[str, Any]) -> ModelSnapshot | None:
        if not self.reuse_checkpoints or not (directory / CHECKPOINT_MANIFEST).exists():
            return None
        provenance_path = directory / PROVENANCE_FILE
        if not provenance_path.exists():
            return None
        try:
            record = json.loads(provenance_path.read_text())
            if not _matches(record, expected):
                logger.info(f"Checkpoint in {directory} does not match the configuration, recomputing")
                return None
            model = load_checkpoint(directory)
        except (ArtifactIOError, json.JSONDecodeError) as e:
            logger.warning(f"Cannot reuse checkpoint in {directory}: {e}")
            return None
        if model.digest() != record.get("digest"):
            return None
        logger.info(f"Reusing {model!r} from {directory}")
        return model

    def _experiment_context(self, seed: int, relabeled: bool) -> dict[str, Any]:
        """Settings the training data of a snapshot was produced with."""
        context: dict[str, Any] = {"gen": self.config.gen_for_seed(seed).model_dump(mode="json")}
        if relabeled:
            context["forget_class"] = ObjectClass(self.config.forget_class).value
        return context

    def _store(self, state: SeedState, tag: str, model: ModelSnapshot, experiment: dict[str, Any]) -> None:
        directory = self.model_dir(state.seed, tag)
        save_checkpoint(model, directory)
        write_provenance(model, directory, experiment=experiment)
        state.models[tag] = model

    def _train_baseline(self, state: SeedState, tag: ModelTag, data: dict[str, DatasetSplit]) -> None:
        cfg = self.config.train_original if tag == ModelTag.ORIGINAL else self.config.train_retrain
        cfg = cfg.model_copy(update={"seed": state.seed})
        experiment = self._experiment_context(state.seed, relabeled=tag != ModelTag.ORIGINAL)
        expected = {
            "tag": tag.value,
            "init_seed": state.seed,
            "train": cfg.model_dump(mode="json"),
            "train_data_digest": data["train"].digest(),
            "experiment": experiment,
        }
        model = self._load_reusable(self.model_dir(state.seed, tag.value), expected)
        if model is None:
            initial = init_model(self.config.arch, seed=state.seed, tag=tag)
            model = train(initial, data["train"], cfg, validation=data["val"], tag=tag)
        self._store(state, tag.value, model, experiment)

    def _run_train_original(self, state: SeedState, node: str) -> None:
        self._train_baseline(state, ModelTag.ORIGINAL, state.splits)

    def _run_relabel(self, state: SeedState, node: str) -> None:
        state.curated = {name: relabel(split, self.config.forget_class) for name, split in state.splits.items()}

    def _run_train_retrain(self, state: SeedState, node: str) -> None:
        self._train_baseline(state, ModelTag.RETRAIN, state.curated)

    def _run_unlearn(self, state: SeedState, node: str) -> None:
        method = self.dag_manager.method_of(node).with_seed(state.seed)
        original = state.models[ModelTag.ORIGINAL.value]
        experiment = self._experiment_context(state.seed, relabeled=True)
        expected = {
            "display_tag": method.display_tag,
            "fraction": method.fraction,
            "sigma": method.sigma,
            "granularity": method.granularity.value,
            "scope": method.scope.value,
            "perturbation_seed": method.seed,
            "finetune": method.finetune_cfg.model_dump(mode="json"),
            "source_digest": original.digest(),
            "train_data_digest": state.curated["train"].digest(),
            "experiment": experiment,
        }
        model = self._load_reusable(self.model_dir(state.seed, method.display_tag), expected)
        if model is None:
            model = run_unlearning(method, original, state.curated["train"])
        self._store(state, method.display_tag, model, experiment)

    def _run_explain(self, state: SeedState, node: str) -> None:
        test = state.curated["test"]
        state.eval_indices = eval_subset(state.seed, len(test), self.config.eval_sample_count)
        images = np.stack([test[i].image for i in state.eval_indices])
        for tag, model in state.models.items():
            logger.info(f"Explaining {len(images)} test images under {tag} (seed {state.seed})")
            heatmaps = explain_batch(model, images, self.config.sidu, model_tag=tag)
            state.heatmaps[tag] = heatmaps
            heatmap_dir = self.model_dir(state.seed, tag) / HEATMAP_DIR
            for index, heatmap in zip(state.eval_indices, heatmaps, strict=True):
                stem = heatmap_dir / HEATMAP_STEM_TEMPLATE.format(index=index)
                save_heatmap(heatmap, stem, self.config.sidu)
                save_heatmap_png(heatmap, stem)
        if self.config.render_panels:
            self._render(state, images)

    def _render(self, state: SeedState, images: np.ndarray) -> None:
        original = state.heatmaps[ModelTag.ORIGINAL.value]
        for tag, heatmaps in state.heatmaps.items():
            if tag == ModelTag.ORIGINAL.value:
                continue
            diff_dir = self.model_dir(state.seed, tag) / DIFF_DIR
            diff_dir.mkdir(parents=True, exist_ok=True)
            for index, h_o, h_u in zip(state.eval_indices, original, heatmaps, strict=True):
                path = diff_dir / f"{HEATMAP_STEM_TEMPLATE.format(index=index)}.png"
                path.write_bytes(render_attention_diff(h_o, h_u))
        panel_dir = self.config.seed_dir(state.seed) / PANEL_DIR
        for position, index in enumerate(state.eval_indices[:PANEL_SAMPLE_COUNT]):
            by_model = {tag: heatmaps[position] for tag, heatmaps in state.heatmaps.items()}
            path = panel_dir / f"{HEATMAP_STEM_TEMPLATE.format(index=index)}.png"
            render_heatmap_panel(images[position], by_model, path)

    def _coverage(
        self, tag: str, metric: MetricName, heatmaps: list[Heatmap], classes: Iterable[ObjectClass], samples: list
    ) -> MetricResult | int:
        try:
            return class_coverage(heatmaps, samples, classes, self.config.zero_mass_policy, metric=metric.value)
        except UndefinedMetricError as e:
            logger.warning(f"{metric} undefined for {tag}: {e}")
            return e.n_skipped

    def _run_evaluate(self, state: SeedState, node: str) -> None:
        test = state.curated["test"]
        samples = [test[i] for i in state.eval_indices]
        forget = ObjectClass(self.config.forget_class)
        original = state.heatmaps.get(ModelTag.ORIGINAL.value)
        state.rows = []
        for tag, model in state.models.items():
            mae, rmse = evaluate_regression(model, test)
            row = MetricsRow(seed=state.seed, model=tag, mae=mae, rmse=rmse, n_eval=len(samples))
            heatmaps = state.heatmaps.get(tag)
            if heatmaps is not None:
                retained = self._coverage(tag, MetricName.RETAINED_HC, heatmaps, ObjectClass.retained(forget), samples)
                human = self._coverage(tag, MetricName.HUMAN_HC, heatmaps, {forget}, samples)
                if isinstance(retained, MetricResult):
                    row.r_hc, row.r_hc_skipped = retained.value, retained.n_skipped
                else:
                    row.r_hc_skipped = retained
                if isinstance(human, MetricResult):
                    row.h_hc, row.h_hc_skipped = human.value, human.n_skipped
                else:
                    row.h_hc_skipped = human
                if tag != ModelTag.ORIGINAL.value and original is not None:
                    row.attention_shift = attention_shift(heatmaps, original).value
            logger.info(
                f"seed {state.seed} {tag}: MAE={mae:.4f} RMSE={rmse:.4f} r-HC={row.r_hc} h-HC={row.h_hc} "
                f"AS={row.attention_shift}"
            )
            state.rows.append(row)

    def _run_report(self, state: SeedState, node: str) -> None:
        logger.info(f"Seed {state.seed} complete: {len(state.rows)} report rows")

    # execution

    def _execute_node(self, name: str) -> None:
        node = self.execution_nodes[name]
        state = self.states.setdefault(node.seed, SeedState(seed=node.seed))
        logger.info(f"Starting {node.stage}: {name}")
        node.status = ExecutionStatus.RUNNING
        node.start_time = time.time()
        try:
            self._stage_runners[node.stage](state, node.node)
        except Exception as e:
            node.status = ExecutionStatus.FAILED
            node.error_message = str(e)
            logger.exception(f"Stage {name} failed")
            raise
        else:
            node.status = ExecutionStatus.SUCCESS
        finally:
            node.end_time = time.time()
            self._record(node)

    def _record(self, node: ExecutionNode) -> None:
        self.execution_history.append(
            {
                "node_name": node.name,
                "stage": node.stage.value,
                "status": node.status.value,
                "start_time": node.start_time,
                "end_time": node.end_time,
                "error_message": node.error_message,
            }
        )

    def rows(self) -> list[MetricsRow]:
        """Report rows of every seed evaluated so far, ordered by seed then model."""
        return [row for seed in self.config.seeds if seed in self.states for row in self.states[seed].rows]

    def build_report(self) -> MetricsReport:
        return MetricsReport.build(
            self.rows(), config=self.config.to_dict(), zero_mass_policy=self.config.zero_mass_policy
        )

    def _flush_partial(self) -> Path | None:
        path = self.config.output_dir / PARTIAL_REPORT
        try:
            payload = {
                "report": self.build_report().model_dump(mode="json"),
                "execution_history": self.execution_history,
            }
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(payload, indent=2))
        except Exception as e:
            logger.error(f"Cannot flush partial report to {path}: {e}")
            return None
        logger.warning(f"Partial results written to {path}")
        return path

    def execute(self, until: PipelineStage | None = None) -> MetricsReport | None:
        """Run the plan for every seed.

        Args:
            until: Last stage to run; the whole graph when None

        Returns:
            MetricsReport | None: The report, written to ``output_dir`` when the report stage ran

        Raises:
            Exception: The first stage error, after ``partial_report.json`` is written
        """
        deterministic_torch()
        self._init_execution_nodes(until)
        self.states.clear()
        self.report = None
        for position, name in enumerate(self.execution_plan):
            if not self._can_execute_node(name):
                logger.warning(f"Node {name} dependencies not satisfied, skipping")
                self.execution_nodes[name].status = ExecutionStatus.SKIPPED
                continue
            try:
                self._execute_node(name)
            except Exception:
                for rest in self.execution_plan[position + 1 :]:
                    self.execution_nodes[rest].status = ExecutionStatus.SKIPPED
                self._flush_partial()
                raise

        done = sum(n.status == ExecutionStatus.SUCCESS for n in self.execution_nodes.values())
        logger.info(f"Experiment execution completed: {done}/{len(self.execution_plan)} nodes successful")
        if until in (None, PipelineStage.EVALUATE, PipelineStage.REPORT):
            self.report = self.build_report()
            write_report(self.report, self.config.output_dir)
        return self.report

    def get_execution_status(self) -> dict[str, Any]:
        """Status, timing and dependencies of every node."""
        summary = {status.value: 0 for status in ExecutionStatus}
        node_status = {}
        for name, node in self.execution_nodes.items():
            node_status[name] = {
                "stage": node.stage.value,
                "status": node.status.value,
                "dependencies": [f"{node.seed}/{d}" for d in self.dag_manager.dependencies(node.node)],
                "dependents": [f"{node.seed}/{d}" for d in self.dag_manager.dependents(node.node)],
                "start_time": node.start_time,
                "end_time": node.end_time,
                "error_message": node.error_message,
            }
            summary[node.status.value] += 1
        return {
            "total_nodes": len(self.execution_nodes),
            "execution_plan": self.execution_plan,
            "node_status": node_status,
            "summary": summary,
        }

    def get_dag_info(self) -> dict[str, Any]:
        """Stage graph of a single seed."""
        graph = self.dag_manager.graph
        return {
            "is_valid_dag": self.dag_manager.is_valid_dag(),
            "total_nodes": len(graph.nodes),
            "total_edges": len(graph.edges),
            "topological_order": self.dag_manager.get_topological_order(),
            "execution_plan": self.execution_plan,
        }


def run_experiment(config: ExperimentConfig, reuse_checkpoints: bool = False) -> MetricsReport:
    """Run every stage for every seed and write ``report.{csv,json,txt}`` under ``output_dir``."""
    manager = ExperimentManager(config, reuse_checkpoints=reuse_checkpoints)
    report = manager.execute()
    assert report is not None
    return report
