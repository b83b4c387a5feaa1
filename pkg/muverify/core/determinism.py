"""
Seed plumbing for reproducible runs.
"""

from collections.abc import Sequence

import numpy as np
import torch
from loguru import logger

_TORCH_PINNED = False


def deterministic_torch() -> None:
    """Pin torch to a single intra-op thread with deterministic kernels.

    CPU convolution reductions depend on the thread split, so bit-identical
    reruns need a fixed thread count.
    """
    global _TORCH_PINNED
    if _TORCH_PINNED:
        return
    torch.set_num_threads(1)
    torch.use_deterministic_algorithms(True)
    _TORCH_PINNED = True
    logger.debug("torch pinned to 1 thread with deterministic algorithms")


def make_rng(seed: int | Sequence[int]) -> np.random.Generator:
    """Create a numpy generator from an integer seed or a seed tuple.

    Tuples such as ``(master_seed, stream, index)`` give statistically independent
    streams for distinct tuples.
    """
    if isinstance(seed, int | np.integer):
        return np.random.default_rng(int(seed))
    return np.random.default_rng([int(s) for s in seed])


def torch_generator(seed: int | Sequence[int]) -> torch.Generator:
    """Create a CPU torch generator seeded from an integer or seed tuple."""
    if isinstance(seed, int | np.integer):
        value = int(seed)
    else:
        value = int(np.random.SeedSequence([int(s) for s in seed]).generate_state(1, dtype=np.uint64)[0] >> 1)
    gen = torch.Generator(device="cpu")
    gen.manual_seed(value)
    return gen
