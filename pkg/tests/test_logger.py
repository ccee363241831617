"""Tests for the `logger` module."""

from __future__ import annotations

import pytest

from dicut_stream.logger import ROOT_NAME, get_logger


def test_loggers_are_package_children() -> None:
    """Module loggers live under the package logger, once per name."""
    assert get_logger("dicut_stream.engine").name == "dicut_stream.engine"
    assert get_logger("scripts").name == f"{ROOT_NAME}.scripts"
    assert get_logger("dicut_stream.engine") is get_logger("dicut_stream.engine")


def test_disable_silences_every_module(caplog: pytest.LogCaptureFixture) -> None:
    """Disabling any logger of the package silences all of them until the block ends.

    Parameters:
        caplog: Pytest fixture to capture logs.
    """
    engine = get_logger("dicut_stream.engine")
    with get_logger("dicut_stream.validation").disable():
        engine.warning("hidden")
    engine.warning("shown")
    assert [record.getMessage() for record in caplog.records] == ["shown"]
