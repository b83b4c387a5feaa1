"""
Torch module of the counting regressor.
"""

from collections.abc import Mapping

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from muverify.core.determinism import deterministic_torch
from muverify.model.arch import ArchConfig


class CountingNet(nn.Module):
    """Conv blocks, global average pool, ReLU hidden layer, scalar output.

    ``forward`` returns the prediction together with the last block's pooled
    activations so SIDU reads both from a single pass.
    """

    def __init__(self, arch: ArchConfig):
        super().__init__()
        in_channels = 1
        self.convs = nn.ModuleList()
        for block in arch.conv_blocks:
            self.convs.append(
                nn.Conv2d(in_channels, block.out_channels, block.kernel_size, padding=block.padding)
            )
            in_channels = block.out_channels
        self.hidden = nn.Linear(in_channels, arch.hidden_width)
        self.out = nn.Linear(arch.hidden_width, 1)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        for conv in self.convs:
            x = F.max_pool2d(F.relu(conv(x)), 2)
        features = x
        pooled = features.mean(dim=(2, 3))
        prediction = self.out(F.relu(self.hidden(pooled))).squeeze(-1)
        return prediction, features


def build_module(
    arch: ArchConfig,
    weights: Mapping[str, torch.Tensor | np.ndarray],
    dtype: torch.dtype = torch.float32,
    trainable: bool = False,
) -> CountingNet:
    """Instantiate a ``CountingNet`` carrying a copy of the given weights.

    Args:
        arch: Architecture of the network
        weights: Parameter tensors keyed by state-dict name
        dtype: Floating point type of the module
        trainable: Whether parameters require gradients

    Returns:
        CountingNet: A module in eval mode that owns its parameters
    """
    deterministic_torch()
    module = CountingNet(arch).to(dtype)
    with torch.no_grad():
        for name, param in module.named_parameters():
            value = weights[name]
            param.copy_((value if isinstance(value, torch.Tensor) else torch.tensor(value)).to(dtype))
    module.eval()
    module.requires_grad_(trainable)
    return module
