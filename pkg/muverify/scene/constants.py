"""
Constants used by the synthetic scene generator.
"""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class ObjectClass(str, Enum):
    """Annotated object classes, in label-sum order."""

    HUMAN = "human"
    BICYCLE = "bicycle"
    VEHICLE = "vehicle"
    MOTORCYCLE = "motorcycle"

    def __str__(self) -> str:
        """Return the string representation of the object class."""
        return self.value

    def __repr__(self) -> str:
        """Return the string representation of the object class."""
        return self.value

    @property
    def color(self) -> tuple[int, int, int]:
        """Annotation colour used when drawing boxes of this class."""
        return ANNOTATION_COLORS[self]

    @classmethod
    def retained(cls, forget_class: "ObjectClass") -> frozenset["ObjectClass"]:
        """All classes except ``forget_class``."""
        return frozenset(c for c in cls if c != forget_class)


class GlyphShape(str, Enum):
    """Procedural shape families, one per object class."""

    FILLED_ELLIPSE = "filled_ellipse"
    TWIN_RINGS = "twin_rings"
    FILLED_RECTANGLE = "filled_rectangle"
    CROSS = "cross"

    def __str__(self) -> str:
        return self.value


class SplitTag(str, Enum):
    """Dataset split names."""

    TRAIN = "train"
    VAL = "val"
    TEST = "test"

    def __str__(self) -> str:
        return self.value

    @property
    def stream(self) -> int:
        """Seed stream index, distinct per split."""
        return list(SplitTag).index(self)


class GlyphSpec(BaseModel):
    """Shape family and pixel size range of a class glyph."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    shape: GlyphShape = Field(description="Shape family drawn for the class")
    width: tuple[int, int] = Field(description="Inclusive glyph width range in pixels")
    height: tuple[int, int] = Field(description="Inclusive glyph height range in pixels")


GLYPH_SPECS: dict[ObjectClass, GlyphSpec] = {
    ObjectClass.HUMAN: GlyphSpec(shape=GlyphShape.FILLED_ELLIPSE, width=(3, 5), height=(7, 11)),
    ObjectClass.BICYCLE: GlyphSpec(shape=GlyphShape.TWIN_RINGS, width=(9, 13), height=(4, 6)),
    ObjectClass.VEHICLE: GlyphSpec(shape=GlyphShape.FILLED_RECTANGLE, width=(10, 15), height=(5, 8)),
    ObjectClass.MOTORCYCLE: GlyphSpec(shape=GlyphShape.CROSS, width=(5, 9), height=(5, 9)),
}

# green, red, blue, cyan
ANNOTATION_COLORS: dict[ObjectClass, tuple[int, int, int]] = {
    ObjectClass.HUMAN: (0, 200, 0),
    ObjectClass.BICYCLE: (220, 0, 0),
    ObjectClass.VEHICLE: (0, 0, 230),
    ObjectClass.MOTORCYCLE: (0, 210, 210),
}

MAX_GLYPH_WIDTH = max(spec.width[1] for spec in GLYPH_SPECS.values())
MAX_GLYPH_HEIGHT = max(spec.height[1] for spec in GLYPH_SPECS.values())

DATASET_MANIFEST = "manifest.json"
IMAGE_NAME_TEMPLATE = "{split}_{index:06d}.png"
PREVIEW_DIR = "previews"
PREVIEW_NAME_TEMPLATE = "{split}_{index:06d}_boxes.png"
