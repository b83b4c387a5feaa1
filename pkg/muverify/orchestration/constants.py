"""
Constants used by the experiment pipeline.
"""

from enum import Enum


class PipelineStage(str, Enum):
    """Stages of one seed's experiment, in dependency order."""

    GENERATE = "generate"
    TRAIN_ORIGINAL = "train_original"
    RELABEL = "relabel"
    TRAIN_RETRAIN = "train_retrain"
    UNLEARN = "unlearn"
    EXPLAIN = "explain"
    EVALUATE = "evaluate"
    REPORT = "report"

    def __str__(self) -> str:
        return self.value


class ExecutionStatus(str, Enum):
    """Execution status of a pipeline node."""

    PENDING = "pending"
    RUNNING = "running"
    SUCCESS = "success"
    FAILED = "failed"
    SKIPPED = "skipped"

    def __str__(self) -> str:
        return self.value


class RowKind(str, Enum):
    """Per-seed or cross-seed report row."""

    SEED = "seed"
    AGGREGATE = "aggregate"

    def __str__(self) -> str:
        return self.value


CURRENT_SCHEMA_VERSION = "0.1.0"
SUPPORTED_SCHEMA_VERSIONS = ["0.1.0"]

UNLEARN_NODE_PREFIX = "unlearn:"
EVAL_SUBSET_STREAM = 7
PANEL_SAMPLE_COUNT = 4

DATA_DIR = "data"
HEATMAP_DIR = "heatmaps"
DIFF_DIR = "diffs"
PANEL_DIR = "panels"
HEATMAP_STEM_TEMPLATE = "sample_{index:03d}"

REPORT_CSV = "report.csv"
REPORT_JSON = "report.json"
REPORT_TXT = "report.txt"
PARTIAL_REPORT = "partial_report.json"
RUN_LOG = "run.log"

# directional acceptance thresholds
MAE_MARGIN = 1.30
