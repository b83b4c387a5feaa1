"""
Low-magnitude weight selection for Prune and Reinit.
"""

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from muverify.model.snapshot import ModelSnapshot
from muverify.unlearn.constants import Granularity, RankingScope


class WeightSelection(BaseModel):
    """Boolean masks over the prunable weights; True marks a selected entry."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    masks: dict[str, np.ndarray] = Field(description="Per-tensor selection masks, in layer order")
    fraction: float = Field(description="Requested share of ranking units")
    granularity: Granularity = Field(default=Granularity.PER_WEIGHT)
    scope: RankingScope = Field(default=RankingScope.GLOBAL)

    @property
    def count(self) -> int:
        """Number of selected weights."""
        return int(sum(int(m.sum()) for m in self.masks.values()))

    @property
    def total(self) -> int:
        """Number of prunable weights P."""
        return int(sum(m.size for m in self.masks.values()))

    def indices(self) -> set[tuple[str, int]]:
        """Selected entries as ``(tensor name, flat index)`` pairs."""
        return {(name, int(i)) for name, mask in self.masks.items() for i in np.flatnonzero(mask)}

    def __repr__(self) -> str:
        return f"WeightSelection({self.count}/{self.total}, {self.granularity}, {self.scope})"


def _n_selected(fraction: float, n: int) -> int:
    return math.floor(round(fraction * n, 9))


def _unit_scores(value: np.ndarray, granularity: Granularity) -> np.ndarray:
    magnitude = np.abs(value.astype(np.float64))
    if granularity == Granularity.PER_FILTER:
        return magnitude.reshape(value.shape[0], -1).mean(axis=1)
    return magnitude.reshape(-1)


def _expand(value: np.ndarray, chosen: np.ndarray, granularity: Granularity) -> np.ndarray:
    """Turn a boolean vector over ranking units into a mask over the tensor."""
    if granularity == Granularity.PER_FILTER:
        return np.broadcast_to(chosen.reshape((-1,) + (1,) * (value.ndim - 1)), value.shape).copy()
    return chosen.reshape(value.shape)


def _lowest(scores: np.ndarray, k: int) -> np.ndarray:
    # stable sort: equal scores keep their (layer order, flat index) position
    chosen = np.zeros(scores.size, dtype=bool)
    chosen[np.argsort(scores, kind="stable")[:k]] = True
    return chosen


def select_low_l1(
    model: ModelSnapshot,
    fraction: float,
    granularity: Granularity = Granularity.PER_WEIGHT,
    scope: RankingScope = RankingScope.GLOBAL,
) -> WeightSelection:
    """Select the ``floor(fraction * units)`` prunable units of smallest L1 magnitude.

    Units are single weights, or whole output filters / dense rows scored by their
    mean absolute weight. Biases are never candidates. Ranking is global across
    conv and dense layers unless ``scope`` is ``per_layer``; ties are broken by
    layer order, then flat index. Larger fractions select supersets.

    Args:
        model: Snapshot to rank
        fraction: Share of units to select, in [0, 1]
        granularity: Ranking unit
        scope: Global or per-layer ranking

    Returns:
        WeightSelection: Masks over every prunable tensor

    Raises:
        ValueError: If ``fraction`` is outside [0, 1]
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")

    names = model.prunable_names()
    scores = {name: _unit_scores(model.weights[name], granularity) for name in names}

    chosen: dict[str, np.ndarray] = {}
    if scope == RankingScope.PER_LAYER:
        for name in names:
            chosen[name] = _lowest(scores[name], _n_selected(fraction, scores[name].size))
    else:
        flat = np.concatenate([scores[name] for name in names])
        picked = _lowest(flat, _n_selected(fraction, flat.size))
        offset = 0
        for name in names:
            chosen[name] = picked[offset : offset + scores[name].size]
            offset += scores[name].size

    masks = {name: _expand(model.weights[name], chosen[name], granularity) for name in names}
    return WeightSelection(masks=masks, fraction=fraction, granularity=granularity, scope=scope)


def prunable_sparsity(model: ModelSnapshot) -> float:
    """Share of prunable weights that are exactly zero."""
    values = [model.weights[name] for name in model.prunable_names()]
    total = sum(v.size for v in values)
    return float(sum(int(np.count_nonzero(v == 0)) for v in values) / total)
