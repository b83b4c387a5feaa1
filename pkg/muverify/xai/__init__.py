"""
Feature-map attribution, verification metrics and heatmap renderings
"""

from . import constants, metrics, render, sidu, storage

__all__ = ["constants", "metrics", "render", "sidu", "storage"]
