"""Unit tests for low-L1 weight selection."""

import numpy as np
import pytest

from muverify.model.arch import ArchConfig
from muverify.model.snapshot import ModelSnapshot
from muverify.unlearn.constants import Granularity, RankingScope
from muverify.unlearn.selection import prunable_sparsity, select_low_l1
from muverify.unlearn.ut.conftest import snapshot_with_values


@pytest.fixture
def distinct_100(arch_100: ArchConfig) -> tuple[ModelSnapshot, np.ndarray]:
    """Fixture for 100 prunable weights with distinct magnitudes and random signs."""
    rng = np.random.default_rng(8)
    magnitudes = rng.permutation(np.arange(1, 101)) / 100.0
    values = (magnitudes * rng.choice([-1.0, 1.0], size=100)).astype(np.float32)
    return snapshot_with_values(arch_100, values), magnitudes


def _flat_selected(model: ModelSnapshot, fraction: float, **kwargs) -> np.ndarray:
    selection = select_low_l1(model, fraction, **kwargs)
    return np.concatenate([selection.masks[name].reshape(-1) for name in model.prunable_names()])


def test_fraction_zero_and_one(distinct_100: tuple[ModelSnapshot, np.ndarray]):
    """Test fraction 0 selects nothing and fraction 1 selects all P weights."""
    model, _ = distinct_100
    assert select_low_l1(model, 0.0).count == 0
    everything = select_low_l1(model, 1.0)
    assert everything.count == everything.total == 100


def test_95_percent_leaves_five_largest(distinct_100: tuple[ModelSnapshot, np.ndarray]):
    """Test the 5 largest-|w| weights are exactly the unselected set at fraction 0.95."""
    model, magnitudes = distinct_100
    selected = _flat_selected(model, 0.95)
    assert selected.sum() == 95
    expected_kept = set(np.argsort(magnitudes)[-5:].tolist())
    assert set(np.flatnonzero(~selected).tolist()) == expected_kept


def test_biases_are_never_candidates(distinct_100: tuple[ModelSnapshot, np.ndarray]):
    """Test selection masks only cover weight tensors."""
    model, _ = distinct_100
    assert all(name.endswith(".weight") for name in select_low_l1(model, 1.0).masks)


def test_selection_is_monotone(original: ModelSnapshot):
    """Test a smaller fraction selects a subset of a larger one."""
    fractions = [0.0, 0.1, 0.35, 0.5, 0.9, 0.95, 1.0]
    selections = [select_low_l1(original, f).indices() for f in fractions]
    for smaller, larger in zip(selections, selections[1:], strict=False):
        assert smaller <= larger


def test_ties_break_by_layer_then_flat_index(arch_100: ArchConfig):
    """Test equal magnitudes select the earliest (layer, flat index) entries."""
    model = snapshot_with_values(arch_100, np.full(100, 0.5, dtype=np.float32))
    selected = _flat_selected(model, 0.1)
    assert np.flatnonzero(selected).tolist() == list(range(10))


def test_selection_is_storage_order_stable(original: ModelSnapshot):
    """Test weights stored in another order give the same selected set."""
    shuffled = original.derive(weights=dict(reversed(list(original.weights.items()))))
    assert select_low_l1(shuffled, 0.6).indices() == select_low_l1(original, 0.6).indices()


def test_per_layer_scope_selects_within_each_layer(original: ModelSnapshot):
    """Test per-layer ranking selects floor(fraction * size) in every tensor."""
    selection = select_low_l1(original, 0.5, scope=RankingScope.PER_LAYER)
    for name, mask in selection.masks.items():
        assert mask.sum() == mask.size // 2
        threshold = np.abs(original.weights[name])[~mask].min()
        assert np.abs(original.weights[name])[mask].max() <= threshold


def test_per_filter_selects_whole_filters(original: ModelSnapshot):
    """Test per-filter ranking selects complete output filters and dense rows."""
    selection = select_low_l1(original, 0.5, granularity=Granularity.PER_FILTER)
    n_filters = sum(original.weights[name].shape[0] for name in original.prunable_names())
    selected_filters = 0
    for mask in selection.masks.values():
        rows = mask.reshape(mask.shape[0], -1)
        assert np.all(rows.all(axis=1) | ~rows.any(axis=1))
        selected_filters += int(rows.all(axis=1).sum())
    assert selected_filters == n_filters // 2


def test_fraction_out_of_range_raises(original: ModelSnapshot):
    """Test fractions outside [0, 1] are rejected."""
    with pytest.raises(ValueError):
        select_low_l1(original, 1.5)


def test_prunable_sparsity(arch_100: ArchConfig):
    """Test sparsity counts exact zeros among the 100 prunable weights."""
    values = np.ones(100, dtype=np.float32)
    values[:30] = 0.0
    assert prunable_sparsity(snapshot_with_values(arch_100, values)) == 0.3
