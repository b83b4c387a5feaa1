"""
Exception types shared by all muverify modules.
"""


class MuVerifyError(Exception):
    """Base class for all muverify errors."""


class ConfigurationError(MuVerifyError, ValueError):
    """A configuration object violates its invariants."""


class InputShapeError(MuVerifyError, ValueError):
    """An input array does not have the shape the operation expects."""


class EmptyInputError(MuVerifyError, ValueError):
    """An operation received an empty dataset or list where data is required."""


class UndefinedMetricError(MuVerifyError, ValueError):
    """A metric has no contributing samples.

    Attributes:
        n_skipped: Number of samples dropped before the metric became undefined
    """

    def __init__(self, message: str, n_skipped: int = 0):
        super().__init__(message)
        self.n_skipped = n_skipped


class ArtifactIOError(MuVerifyError, OSError):
    """Reading or writing an artifact (dataset, checkpoint, heatmap, report) failed."""
