"""
Constants used by attribution and verification metrics.
"""

from enum import Enum

from muverify.scene.constants import ObjectClass


class SdSigmaMode(str, Enum):
    """How the similarity-difference kernel width is chosen."""

    FIXED = "fixed"
    ADAPTIVE = "adaptive"

    def __str__(self) -> str:
        return self.value


class ZeroMassPolicy(str, Enum):
    """Treatment of heatmaps whose total mass is zero in coverage metrics."""

    SKIP = "skip"
    ZERO = "zero"

    def __str__(self) -> str:
        return self.value


class MetricName(str, Enum):
    """Verification metrics reported per model."""

    HC = "HC"
    RETAINED_HC = "r-HC"
    HUMAN_HC = "h-HC"
    AS = "AS"

    def __str__(self) -> str:
        return self.value


RETAINED_CLASSES = frozenset({ObjectClass.BICYCLE, ObjectClass.VEHICLE, ObjectClass.MOTORCYCLE})
HUMAN_CLASSES = frozenset({ObjectClass.HUMAN})
STD_CONVENTION = "population"

MIN_ADAPTIVE_SIGMA = 0.25
ADAPTIVE_SIGMA_SCALE = 0.25

HEATMAP_RAW_SUFFIX = ".f32"
HEATMAP_HEADER_SUFFIX = ".json"
HEATMAP_PNG_SUFFIX = ".png"
HEATMAP_COLORMAP = "jet"
OVERLAY_MIN_ALPHA = 0.35
OVERLAY_MAX_ALPHA = 0.75
DIFF_EPSILON = 0.02
