"""
Shared building blocks: errors, determinism helpers and interfaces
"""

from . import determinism, errors, interface

__all__ = ["determinism", "errors", "interface"]
