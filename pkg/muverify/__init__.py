"""
muverify: machine unlearning on a counting regressor, verified with attribution heatmaps
"""

__version__ = "0.1.0"
