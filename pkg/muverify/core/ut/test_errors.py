"""Unit tests for the error hierarchy."""

import pytest

from muverify.core.errors import (
    ArtifactIOError,
    ConfigurationError,
    EmptyInputError,
    InputShapeError,
    MuVerifyError,
    UndefinedMetricError,
)


@pytest.mark.parametrize("error", [ConfigurationError, InputShapeError, EmptyInputError, UndefinedMetricError])
def test_value_errors(error):
    """Test argument-type errors are both MuVerifyError and ValueError."""
    assert issubclass(error, MuVerifyError)
    assert issubclass(error, ValueError)


def test_artifact_error_is_os_error():
    """Test artifact failures can be caught as OSError."""
    with pytest.raises(OSError):
        raise ArtifactIOError("disk full")


def test_undefined_metric_carries_skip_count():
    """Test the skip count travels with the exception."""
    error = UndefinedMetricError("h-HC is undefined", n_skipped=7)
    assert error.n_skipped == 7
    assert str(error) == "h-HC is undefined"
    assert UndefinedMetricError("x").n_skipped == 0
