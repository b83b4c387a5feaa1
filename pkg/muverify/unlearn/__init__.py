"""
Unlearning methods: Finetune, Prune, Reinit and Confuse
"""

from . import constants, method, methods, provenance, selection

__all__ = ["constants", "method", "methods", "provenance", "selection"]
