"""Configuration for the pytest test suite."""

from __future__ import annotations

import pytest

from dicut_stream.graph import DirectedMultigraph
from tests import FIXTURES_DIR


@pytest.fixture(name="triangle")
def fixture_triangle() -> DirectedMultigraph:
    """A directed 3-cycle."""
    return DirectedMultigraph(3, ((0, 1), (1, 2), (2, 0)))


@pytest.fixture(name="star")
def fixture_star() -> DirectedMultigraph:
    """An out-star: vertex 0 points to 5 leaves."""
    return DirectedMultigraph(6, tuple((0, leaf) for leaf in range(1, 6)))


@pytest.fixture(name="triangle_path")
def fixture_triangle_path() -> str:
    """Path to the 3-cycle edge list."""
    return str(FIXTURES_DIR / "triangle.txt")
