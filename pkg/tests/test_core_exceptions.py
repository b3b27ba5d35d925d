"""Tests for core exception classes."""

import pytest

from core.exceptions import (
    CheckpointError,
    ConfigError,
    DatasetError,
    FrozenParameterError,
    IfmminError,
    InvalidArgumentError,
    ShapeError,
    UnknownPrimitiveError,
    ValidationError,
)


def test_error_with_default_user_friendly():
    """Without an explicit text the CLI shows the internal message."""
    error = IfmminError("Internal error message")

    assert str(error) == "Internal error message"
    assert error.user_friendly == "Internal error message"
    assert error.exit_code == 2


def test_error_with_custom_user_friendly():
    error = IfmminError("Internal error", "Custom user message")

    assert str(error) == "Internal error"
    assert error.user_friendly == "Custom user message"


@pytest.mark.parametrize("cls", [ConfigError, DatasetError, CheckpointError])
def test_validation_errors_exit_with_one(cls):
    error = cls("bad input")
    assert isinstance(error, ValidationError)
    assert error.exit_code == 1


@pytest.mark.parametrize("cls", [InvalidArgumentError, FrozenParameterError])
def test_runtime_errors_exit_with_two(cls):
    assert cls("boom").exit_code == 2


def test_shape_error_message():
    error = ShapeError("matmul", (2, 3), (4, 5), detail="inner dimensions")
    assert str(error) == "matmul: shape mismatch (2, 3) vs (4, 5) (inner dimensions)"
    assert error.kind == "matmul"
    assert error.shapes == ((2, 3), (4, 5))
    assert isinstance(error, ValueError)


def test_unknown_primitive_error_is_not_quoted():
    error = UnknownPrimitiveError("unknown primitive kind 'fft'")
    assert str(error) == "unknown primitive kind 'fft'"
    assert isinstance(error, KeyError)
