"""
Synthetic annotated counting scenes: generation, curation and storage
"""

from . import constants, curation, generator, preview, storage, types

__all__ = ["constants", "curation", "generator", "preview", "storage", "types"]
