"""
Stage graph of one seed's experiment.
"""

from pathlib import Path

import networkx as nx
from loguru import logger
from matplotlib.figure import Figure
from rich.console import Console
from rich.tree import Tree

from muverify.core.errors import ConfigurationError
from muverify.orchestration.constants import UNLEARN_NODE_PREFIX, PipelineStage
from muverify.orchestration.experiment_config import ExperimentConfig
from muverify.unlearn.method import UnlearnMethod

_STAGE_LAYER = {stage: i for i, stage in enumerate(PipelineStage)}


def unlearn_node(method: UnlearnMethod) -> str:
    return f"{UNLEARN_NODE_PREFIX}{method.display_tag}"


class StageDAGManager:
    """Builds and orders the stage graph for an ExperimentConfig.

    Features:
    - One node per stage, one ``unlearn:<tag>`` node per unlearning method
    - Refuses cyclic graphs
    - Deterministic topological order and plans truncated at a target stage
    - Rich tree and matplotlib renderings of the plan
    """

    config: ExperimentConfig
    _graph: nx.DiGraph

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self._graph = nx.DiGraph()
        self._methods: dict[str, UnlearnMethod] = {}
        self._build_graph()

    @property
    def graph(self) -> nx.DiGraph:
        return self._graph

    def _add_stage(self, node: str, stage: PipelineStage) -> None:
        self._graph.add_node(node, stage=stage, layer=_STAGE_LAYER[stage], order=len(self._graph))

    def _build_graph(self) -> None:
        """generate -> train_original -> relabel -> {train_retrain, unlearn:*} -> explain -> evaluate -> report"""
        for stage in (PipelineStage.GENERATE, PipelineStage.TRAIN_ORIGINAL, PipelineStage.RELABEL):
            self._add_stage(stage.value, stage)
        self._graph.add_edge(PipelineStage.GENERATE.value, PipelineStage.TRAIN_ORIGINAL.value)
        self._graph.add_edge(PipelineStage.TRAIN_ORIGINAL.value, PipelineStage.RELABEL.value)

        branches = [PipelineStage.TRAIN_RETRAIN.value]
        self._add_stage(PipelineStage.TRAIN_RETRAIN.value, PipelineStage.TRAIN_RETRAIN)
        for method in self.config.expanded_methods():
            node = unlearn_node(method)
            if node in self._graph:
                raise ConfigurationError(f"Duplicate unlearning node: {node}")
            self._add_stage(node, PipelineStage.UNLEARN)
            self._methods[node] = method
            branches.append(node)

        for stage in (PipelineStage.EXPLAIN, PipelineStage.EVALUATE, PipelineStage.REPORT):
            self._add_stage(stage.value, stage)
        for node in branches:
            self._graph.add_edge(PipelineStage.RELABEL.value, node)
            self._graph.add_edge(node, PipelineStage.EXPLAIN.value)
        self._graph.add_edge(PipelineStage.EXPLAIN.value, PipelineStage.EVALUATE.value)
        self._graph.add_edge(PipelineStage.EVALUATE.value, PipelineStage.REPORT.value)

    def stage_of(self, node: str) -> PipelineStage:
        return self._graph.nodes[node]["stage"]

    def method_of(self, node: str) -> UnlearnMethod | None:
        return self._methods.get(node)

    def is_valid_dag(self) -> bool:
        """Check the stage graph has no cycles."""
        if len(self._graph.edges) == 0:
            return True
        return nx.is_directed_acyclic_graph(self._graph)

    def get_topological_order(self) -> list[str]:
        """Stage nodes in dependency order; ties keep insertion order.

        Raises:
            ConfigurationError: If the graph contains cycles
        """
        if not self.is_valid_dag():
            raise ConfigurationError("Cannot order a stage graph with cycles")
        return list(nx.lexicographical_topological_sort(self._graph, key=lambda n: self._graph.nodes[n]["order"]))

    def generate_execution_plan(self, until: PipelineStage | None = None) -> list[str]:
        """Nodes to run, in order, to complete every node of stage ``until`` (all nodes if None)."""
        order = self.get_topological_order()
        if until is None:
            return order
        targets = [n for n in order if self.stage_of(n) == PipelineStage(until)]
        needed = set(targets)
        for node in targets:
            needed |= nx.ancestors(self._graph, node)
        return [n for n in order if n in needed]

    def dependencies(self, node: str) -> list[str]:
        return list(self._graph.predecessors(node))

    def dependents(self, node: str) -> list[str]:
        return list(self._graph.successors(node))

    def visualize_with_rich(self, console: Console | None = None) -> Tree:
        """Print the plan as a rich tree rooted at ``generate``.

        Each node is shown as ``<stage>: <node>``; nodes reached twice are printed once.
        """
        if not self.is_valid_dag():
            raise ConfigurationError("Graph is not a DAG")
        console = console or Console()
        roots = [n for n in self.get_topological_order() if self._graph.in_degree(n) == 0]
        seen: set[str] = set()

        def build_tree(node: str, tree: Tree) -> None:
            label = f"{self.stage_of(node)}: {node}"
            if node in seen:
                tree.add(f"[dim]{label} (see above)[/dim]")
                return
            seen.add(node)
            branch = tree.add(label)
            for succ in sorted(self._graph.successors(node), key=lambda n: self._graph.nodes[n]["order"]):
                build_tree(succ, branch)

        tree = Tree(f">>> Stage plan: {self.config.name} <<<")
        for root in roots:
            build_tree(root, tree)
        console.print(tree)
        console.print(f"Total nodes: {len(self._graph.nodes)}  Total edges: {len(self._graph.edges)}")
        return tree

    def visualize_with_plt(self, output_file: str | Path) -> Path:
        """Draw the stage graph in stage layers and save it as an image."""
        if not self.is_valid_dag():
            raise ConfigurationError("Graph is not a DAG")
        pos = nx.multipartite_layout(self._graph, subset_key="layer")
        fig = Figure(figsize=(12, 6))
        ax = fig.subplots()
        nx.draw_networkx(
            self._graph, pos, ax=ax, node_color="#306998", node_size=900, font_size=8, font_color="white", arrowsize=15
        )
        ax.set_title(f"Stage plan: {self.config.name}")
        ax.set_axis_off()
        output_file = Path(output_file)
        output_file.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(output_file, bbox_inches="tight", dpi=150)
        logger.info(f"Stage plan drawn to {output_file}")
        return output_file
