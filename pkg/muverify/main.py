"""
Command line entry point: ``muverify <stage> --config PATH --seed N --out DIR``.
"""

import sys
from pathlib import Path

import click
from loguru import logger
from rich.console import Console

from muverify import __version__
from muverify.core.errors import MuVerifyError
from muverify.orchestration.constants import DATA_DIR, REPORT_JSON, RUN_LOG, PipelineStage
from muverify.orchestration.experiment_config import ExperimentConfig
from muverify.orchestration.manager import ExperimentManager
from muverify.orchestration.report import load_report, report_to_text
from muverify.scene.constants import SplitTag
from muverify.scene.preview import write_previews

LOG_LEVELS = ["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR"]

# subcommand -> last stage it runs
STAGE_COMMANDS = {
    "generate": PipelineStage.GENERATE,
    "train": PipelineStage.TRAIN_RETRAIN,
    "unlearn": PipelineStage.UNLEARN,
    "explain": PipelineStage.EXPLAIN,
    "evaluate": PipelineStage.EVALUATE,
}


def configure_logging(level: str, log_file: Path | None = None) -> None:
    """One stderr sink, plus a file sink when ``log_file`` is given."""
    logger.remove()
    logger.add(sys.stderr, level=level)
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        logger.add(log_file, level="DEBUG", mode="w")


def load_config(config_path: Path | None, seed: int | None, out: Path | None) -> ExperimentConfig:
    config = ExperimentConfig.from_file(config_path) if config_path else ExperimentConfig.default()
    return config.with_overrides(seed=seed, output_dir=out)


def common_options(func):
    func = click.option("--log-level", type=click.Choice(LOG_LEVELS), default="INFO", show_default=True)(func)
    func = click.option("--out", type=click.Path(path_type=Path), default=None, help="Override output_dir")(func)
    func = click.option("--seed", type=int, default=None, help="Run this single seed instead of the configured ones")(
        func
    )
    func = click.option(
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        default=None,
        help="JSON or YAML experiment config; the desk-scale default when omitted",
    )(func)
    return func


def _run(
    until: PipelineStage | None,
    config_path: Path | None,
    seed: int | None,
    out: Path | None,
    log_level: str,
    reuse_checkpoints: bool,
    log_to_file: bool = False,
) -> None:
    try:
        config = load_config(config_path, seed, out)
        configure_logging(log_level, config.output_dir / RUN_LOG if log_to_file else None)
        manager = ExperimentManager(config, reuse_checkpoints=reuse_checkpoints)
        report = manager.execute(until)
    except (MuVerifyError, FileNotFoundError) as e:
        raise click.ClickException(str(e)) from e
    summary = manager.get_execution_status()["summary"]
    click.echo(f"{until or 'run-all'}: {summary['success']}/{len(manager.execution_plan)} nodes succeeded")
    if report is not None:
        click.echo(report_to_text(report))


@click.group()
@click.version_option(version=__version__, prog_name="muverify")
def cli() -> None:
    """Unlearn a class from a counting CNN and verify it with attribution heatmaps."""


def _stage_command(name: str, until: PipelineStage) -> None:
    @cli.command(name=name, help=f"Run every stage up to and including '{until}'.")
    @common_options
    def command(config_path: Path | None, seed: int | None, out: Path | None, log_level: str) -> None:
        # stage commands pick up the checkpoints earlier commands wrote
        _run(until, config_path, seed, out, log_level, reuse_checkpoints=True)


for _name, _until in STAGE_COMMANDS.items():
    _stage_command(_name, _until)


@cli.command(name="run-all")
@common_options
@click.option("--reuse-checkpoints", is_flag=True, help="Load matching checkpoints instead of training again")
def run_all(config_path: Path | None, seed: int | None, out: Path | None, log_level: str, reuse_checkpoints: bool):
    """Run the full experiment and write report.{csv,json,txt} plus run.log."""
    _run(None, config_path, seed, out, log_level, reuse_checkpoints, log_to_file=True)


@cli.command()
@common_options
def report(config_path: Path | None, seed: int | None, out: Path | None, log_level: str):
    """Print the metrics table of a finished run from its report.json."""
    configure_logging(log_level)
    try:
        # report.json covers every seed of the run
        metrics = load_report(load_config(config_path, seed, out).output_dir / REPORT_JSON)
    except (MuVerifyError, FileNotFoundError) as e:
        raise click.ClickException(f"{e}; run 'muverify evaluate' or 'muverify run-all' first") from e
    click.echo(report_to_text(metrics))


@cli.command()
@common_options
@click.option(
    "--split", type=click.Choice([s.value for s in SplitTag]), default=SplitTag.TRAIN.value, show_default=True
)
@click.option("--count", type=click.IntRange(min=1), default=8, show_default=True, help="Samples drawn per seed")
def preview(config_path: Path | None, seed: int | None, out: Path | None, log_level: str, split: str, count: int):
    """Draw annotated boxes over samples of the generated dataset."""
    configure_logging(log_level)
    try:
        config = load_config(config_path, seed, out)
        for run_seed in config.seeds:
            paths = write_previews(config.seed_dir(run_seed) / DATA_DIR, SplitTag(split), count)
            click.echo(f"seed {run_seed}: {len(paths)} previews in {paths[0].parent if paths else '-'}")
    except (MuVerifyError, FileNotFoundError) as e:
        raise click.ClickException(str(e)) from e


@cli.command()
@common_options
@click.option("--until", type=click.Choice([s.value for s in PipelineStage]), default=None, help="Truncate the plan")
@click.option("--draw", type=click.Path(path_type=Path), default=None, help="Also draw the stage graph to this image")
def plan(
    config_path: Path | None, seed: int | None, out: Path | None, log_level: str, until: str | None, draw: Path | None
):
    """Print the stage graph and the execution plan without running anything."""
    configure_logging(log_level)
    try:
        manager = ExperimentManager(load_config(config_path, seed, out))
    except (MuVerifyError, FileNotFoundError) as e:
        raise click.ClickException(str(e)) from e
    console = Console()
    manager.dag_manager.visualize_with_rich(console)
    for index, node in enumerate(manager.dag_manager.generate_execution_plan(until and PipelineStage(until)), 1):
        console.print(f"{index:2d}. {node}")
    if draw is not None:
        manager.dag_manager.visualize_with_plt(draw)


if __name__ == "__main__":
    cli()
