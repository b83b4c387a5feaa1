"""Unit tests for initialization, snapshots and the forward pass."""

import numpy as np
import pytest
from pydantic import ValidationError

from muverify.core.errors import ConfigurationError, InputShapeError
from muverify.model.arch import ArchConfig, fan_in
from muverify.model.constants import ModelTag
from muverify.model.functional import forward, forward_batch, init_bound, init_model
from muverify.model.snapshot import ModelSnapshot


def test_init_model_is_deterministic(tiny_arch: ArchConfig):
    """Test same (arch, seed) gives bit-identical snapshots."""
    first = init_model(tiny_arch, seed=5)
    second = init_model(tiny_arch, seed=5)
    assert first.same_weights(second)
    assert first.digest() == second.digest()


def test_init_model_differs_across_seeds(tiny_arch: ArchConfig):
    """Test different seeds give at least one differing weight."""
    assert init_model(tiny_arch, seed=1).digest() != init_model(tiny_arch, seed=2).digest()


def test_init_model_bounds_and_biases(tiny_arch: ArchConfig):
    """Test weights lie within the fan-in bound and biases start at zero."""
    model = init_model(tiny_arch, seed=0)
    for name, value in model.weights.items():
        if name.endswith(".bias"):
            assert not value.any()
        else:
            assert np.abs(value).max() <= init_bound(value.shape)
            if value.size >= 32:
                assert np.abs(value).max() > 0.5 * init_bound(value.shape)
    assert model.tag == ModelTag.ORIGINAL
    assert model.init_scheme == "he_uniform_fan_in"
    assert fan_in((16, 1, 3, 3)) == 9


def test_default_arch_feature_maps_are_64x8x8():
    """Test three 2x downsamplings take a 64x64 input to 64 maps of 8x8."""
    arch = ArchConfig()
    assert arch.feature_shape() == (64, 8, 8)
    output = forward(init_model(arch, seed=0), np.zeros((64, 64), dtype=np.float32))
    assert output.feature_maps.shape == (64, 8, 8)


def test_arch_with_too_small_feature_maps_is_rejected():
    """Test a 16x16 input with three blocks leaves 2x2 maps and is rejected."""
    with pytest.raises(ConfigurationError):
        init_model(ArchConfig(input_height=16, input_width=16), seed=0)


def test_zero_head_predicts_output_bias(tiny_model: ModelSnapshot):
    """Test zero head weights make the prediction equal to the output bias."""
    weights = dict(tiny_model.weights)
    weights["out.weight"] = np.zeros_like(weights["out.weight"])
    assert forward(tiny_model.derive(weights=weights), np.full((32, 32), 0.5)).prediction == 0.0

    weights["out.bias"] = np.array([1.5], dtype=np.float32)
    assert forward(tiny_model.derive(weights=weights), np.full((32, 32), 0.5)).prediction == 1.5


def test_forward_is_pure(tiny_model: ModelSnapshot):
    """Test repeated calls give identical outputs and non-negative feature maps."""
    image = np.random.default_rng(0).random((32, 32), dtype=np.float32)
    first = forward(tiny_model, image)
    second = forward(tiny_model, image)
    assert first.prediction == second.prediction
    assert np.array_equal(first.feature_maps, second.feature_maps)
    assert first.feature_maps.shape == (8, 4, 4)
    assert first.feature_maps.min() >= 0.0


def test_forward_rejects_wrong_shape(tiny_model: ModelSnapshot):
    """Test an image of the wrong size is an input error."""
    with pytest.raises(InputShapeError):
        forward(tiny_model, np.zeros((64, 64), dtype=np.float32))
    with pytest.raises(InputShapeError):
        forward(tiny_model, np.zeros((32,), dtype=np.float32))


def test_forward_batch_keeps_order(tiny_model: ModelSnapshot):
    """Test chunked batch inference matches single-image inference in order."""
    images = np.random.default_rng(1).random((5, 32, 32), dtype=np.float32)
    predictions, features = forward_batch(tiny_model, images, batch_size=2)
    assert predictions.shape == (5,)
    assert features.shape == (5, 8, 4, 4)
    for i, image in enumerate(images):
        np.testing.assert_allclose(predictions[i], forward(tiny_model, image).prediction, rtol=1e-5, atol=1e-6)


def test_snapshot_rejects_inconsistent_shapes(tiny_model: ModelSnapshot):
    """Test weights must match the architecture."""
    weights = dict(tiny_model.weights)
    weights["hidden.weight"] = np.zeros((3, 3), dtype=np.float32)
    with pytest.raises(ValidationError):
        tiny_model.derive(weights=weights)
    del weights["hidden.weight"]
    with pytest.raises(ValidationError):
        tiny_model.derive(weights=weights)


def test_snapshot_is_immutable(tiny_model: ModelSnapshot):
    """Test weights are read-only and the tag cannot be reassigned."""
    with pytest.raises(ValueError):
        tiny_model.weights["out.bias"][0] = 1.0
    with pytest.raises(ValidationError):
        tiny_model.tag = ModelTag.PRUNE


def test_derive_keeps_layer_order(tiny_model: ModelSnapshot):
    """Test weights passed in any order are stored in layer order."""
    shuffled = dict(reversed(list(tiny_model.weights.items())))
    derived = tiny_model.derive(tag=ModelTag.FINETUNE, weights=shuffled)
    assert list(derived.weights) == list(tiny_model.weights)
    assert derived.tag == ModelTag.FINETUNE
    assert tiny_model.tag == ModelTag.ORIGINAL
    convs = ["convs.0.weight", "convs.1.weight", "convs.2.weight"]
    assert derived.conv_weight_names() == convs
    assert derived.prunable_names() == [*convs, "hidden.weight", "out.weight"]
