"""
Experiment harness: configuration, stage graph, manager and report
"""

from . import constants, dag_manager, experiment_config, manager, report

__all__ = ["constants", "dag_manager", "experiment_config", "manager", "report"]
