"""
SGD training and regression evaluation of the counting regressor.
"""

from collections.abc import Mapping

import numpy as np
import torch
import torch.nn.functional as F
from loguru import logger

from muverify.core.determinism import torch_generator
from muverify.core.errors import EmptyInputError, InputShapeError
from muverify.model.arch import ArchConfig, TrainConfig
from muverify.model.constants import ModelTag
from muverify.model.functional import forward_batch
from muverify.model.network import CountingNet, build_module
from muverify.model.snapshot import ModelSnapshot
from muverify.scene.types import DatasetSplit


def _as_tensors(arch: ArchConfig, data: DatasetSplit, dtype: torch.dtype) -> tuple[torch.Tensor, torch.Tensor]:
    images = data.images()
    if images.shape[1:] != (arch.input_height, arch.input_width):
        raise InputShapeError(
            f"{data.split_tag} images are {images.shape[1:]}, model expects "
            f"({arch.input_height}, {arch.input_width})"
        )
    x = torch.from_numpy(np.array(images)).to(dtype).unsqueeze(1)
    y = torch.from_numpy(data.labels()).to(dtype)
    return x, y


def _mean_loss(module: CountingNet, images: torch.Tensor, labels: torch.Tensor, batch_size: int) -> float:
    total = 0.0
    with torch.no_grad():
        for start in range(0, len(labels), batch_size):
            prediction, _ = module(images[start : start + batch_size])
            total += F.mse_loss(prediction, labels[start : start + batch_size], reduction="sum").item()
    return total / len(labels)


def train(
    model: ModelSnapshot,
    data: DatasetSplit,
    cfg: TrainConfig,
    validation: DatasetSplit | None = None,
    tag: ModelTag | None = None,
) -> ModelSnapshot:
    """Minimize mean squared error with mini-batch SGD.

    Runs ``epochs * ceil(N / batch_size)`` steps. Each epoch visits the samples in
    an order drawn from a generator seeded with ``cfg.seed``; the final partial
    batch is averaged over its true size.

    Args:
        model: Starting snapshot, left untouched
        data: Training split
        cfg: Optimizer settings
        validation: Optional split whose MSE is recorded after every epoch
        tag: Tag of the returned snapshot, defaults to the input tag

    Returns:
        ModelSnapshot: The trained snapshot with per-epoch losses appended to its history

    Raises:
        EmptyInputError: If ``data`` is empty and ``cfg.epochs > 0``
        InputShapeError: If image dimensions do not match the architecture
    """
    provenance = {
        "train": cfg.model_dump(mode="json"),
        "train_split_size": len(data),
        "train_data_digest": data.digest(),
    }
    if cfg.epochs == 0:
        logger.debug("epochs=0, returning input weights unchanged")
        return model.derive(tag=tag, **provenance)
    if len(data) == 0:
        raise EmptyInputError(f"Cannot train for {cfg.epochs} epochs on an empty {data.split_tag} split")

    images, labels = _as_tensors(model.arch, data, torch.float32)
    val_tensors = None
    if validation is not None and len(validation) > 0:
        val_tensors = _as_tensors(model.arch, validation, torch.float32)

    module = build_module(model.arch, model.weights, trainable=True)
    optimizer = torch.optim.SGD(module.parameters(), lr=cfg.learning_rate, momentum=0.0, weight_decay=0.0)
    generator = torch_generator(cfg.seed)
    n = len(labels)
    train_losses: list[float] = []
    val_losses: list[float] = []

    for epoch in range(cfg.epochs):
        order = torch.randperm(n, generator=generator)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            index = order[start : start + cfg.batch_size]
            optimizer.zero_grad(set_to_none=True)
            prediction, _ = module(images[index])
            loss = F.mse_loss(prediction, labels[index])
            loss.backward()
            optimizer.step()
            total += loss.item() * len(index)
        train_losses.append(total / n)
        message = f"epoch {epoch + 1}/{cfg.epochs} train_mse={train_losses[-1]:.4f}"
        if val_tensors is not None:
            val_losses.append(_mean_loss(module, *val_tensors, batch_size=cfg.batch_size))
            message += f" val_mse={val_losses[-1]:.4f}"
        logger.info(message)

    weights = {name: param.detach().clone() for name, param in module.named_parameters()}
    return model.derive(
        tag=tag,
        weights=weights,
        history=model.history.extend(train_losses, val_losses),
        **provenance,
    )


def regression_metrics(predictions: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    """Mean absolute and root mean squared error, in float64.

    Raises:
        EmptyInputError: If there are no predictions
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if predictions.size == 0:
        raise EmptyInputError("Cannot evaluate on zero samples")
    if predictions.shape != labels.shape:
        raise InputShapeError(f"{predictions.shape} predictions for {labels.shape} labels")
    errors = predictions - labels
    mae = float(np.mean(np.abs(errors)))
    rmse = float(np.sqrt(np.mean(errors**2)))
    # equal-magnitude errors can round rmse a few ulps below mae
    return mae, max(rmse, mae)


def evaluate_regression(model: ModelSnapshot, data: DatasetSplit) -> tuple[float, float]:
    """Compute ``(mae, rmse)`` of the snapshot on a split.

    Raises:
        EmptyInputError: If ``data`` is empty
    """
    if len(data) == 0:
        raise EmptyInputError(f"Cannot evaluate on an empty {data.split_tag} split")
    predictions, _ = forward_batch(model, data.images())
    return regression_metrics(predictions, data.labels())


def batch_loss(
    arch: ArchConfig,
    weights: Mapping[str, np.ndarray | torch.Tensor],
    images: np.ndarray,
    labels: np.ndarray,
    dtype: torch.dtype = torch.float64,
) -> float:
    """Mean squared error of arbitrary weights on a batch."""
    module = build_module(arch, weights, dtype=dtype)
    x = torch.as_tensor(np.array(images)).to(dtype).unsqueeze(1)
    y = torch.as_tensor(np.array(labels)).to(dtype)
    with torch.no_grad():
        prediction, _ = module(x)
        return F.mse_loss(prediction, y).item()


def loss_gradients(
    model: ModelSnapshot,
    images: np.ndarray,
    labels: np.ndarray,
    dtype: torch.dtype = torch.float64,
) -> dict[str, np.ndarray]:
    """Backpropagated gradient of the batch-mean squared error for every parameter.

    Args:
        model: Snapshot at which to differentiate
        images: ``N x H x W`` inputs
        labels: ``N`` targets
        dtype: Precision of the computation

    Returns:
        dict: Gradients keyed by parameter name, in layer order
    """
    module = build_module(model.arch, model.weights, dtype=dtype, trainable=True)
    x = torch.as_tensor(np.array(images)).to(dtype).unsqueeze(1)
    y = torch.as_tensor(np.array(labels)).to(dtype)
    prediction, _ = module(x)
    F.mse_loss(prediction, y).backward()
    return {name: param.grad.detach().numpy().copy() for name, param in module.named_parameters()}
