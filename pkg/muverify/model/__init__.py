"""
Counting regressor: architecture, snapshots, training and checkpoints
"""

from . import arch, checkpoint, constants, functional, network, snapshot, trainer

__all__ = ["arch", "checkpoint", "constants", "functional", "network", "snapshot", "trainer"]
