"""Logging utilities.

Loggers are children of the `dicut_stream` logger,
so applications can configure the whole package at once.
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from typing import TYPE_CHECKING, Any, ClassVar

if TYPE_CHECKING:
    from collections.abc import Iterator

ROOT_NAME = "dicut_stream"


class Logger:
    """Wrapper around a standard logger, adding a way to silence it temporarily."""

    _instances: ClassVar[dict[str, Logger]] = {}

    def __init__(self, name: str) -> None:
        self._logger = logging.getLogger(name)

    def __getattr__(self, name: str) -> Any:
        return getattr(self._logger, name)

    @contextmanager
    def disable(self) -> Iterator[None]:
        """Temporarily silence every logger of the package."""
        root = logging.getLogger(ROOT_NAME)
        old_level = root.level
        root.setLevel(logging.CRITICAL + 1)
        try:
            yield
        finally:
            root.setLevel(old_level)

    @classmethod
    def _get(cls, name: str = ROOT_NAME) -> Logger:
        if name not in cls._instances:
            cls._instances[name] = cls(name)
        return cls._instances[name]


logger: Logger = Logger._get()
"""The package's root logger."""


def get_logger(name: str = ROOT_NAME) -> Logger:
    """Create and return a new logger instance.

    Parameters:
        name: The logger name, usually the module's `__name__`.

    Returns:
        The logger.
    """
    if not name.startswith(ROOT_NAME):
        name = f"{ROOT_NAME}.{name}"
    return Logger._get(name)
