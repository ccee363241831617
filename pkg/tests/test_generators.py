"""Tests for the `generators` module."""

from __future__ import annotations

import math

import pytest

from dicut_stream.exceptions import InvalidGraphError
from dicut_stream.generators import KINDS, generate
from dicut_stream.graph import dicut_value


@pytest.mark.parametrize("kind", KINDS)
def test_generators_are_seeded(kind: str) -> None:
    """Same seed, same graph; sizes are exact.

    Parameters:
        kind: Generator kind (parametrized).
    """
    first = generate(kind, 40, 50, seed=7)
    second = generate(kind, 40, 50, seed=7)
    assert first.graph == second.graph
    assert (first.graph.n, first.graph.m) == (40, 50)
    assert first.kind == kind


def test_different_seeds_differ() -> None:
    """Changing the seed changes the edges."""
    assert generate("uniform-random", 50, 80, seed=0).graph != generate("uniform-random", 50, 80, seed=1).graph


@pytest.mark.parametrize("fraction", [0.0, 0.5, 0.75, 1.0])
def test_planted_dicut_value(fraction: float) -> None:
    """Exactly the planted edges cross the planted dicut.

    Parameters:
        fraction: Fraction of planted edges (parametrized).
    """
    instance = generate("planted-dicut", 30, 40, seed=3, plant_fraction=fraction)
    assert instance.planted_cut is not None
    assert instance.planted_value == math.ceil(fraction * 40) / 40
    assert dicut_value(instance.graph, instance.planted_cut) == instance.planted_value
    assert len(instance.planted_cut.left) == 15


def test_planted_cut_is_optimal_when_fully_planted() -> None:
    """With every edge planted the instance is fully cut."""
    assert generate("planted-dicut", 10, 30, seed=0, plant_fraction=1.0).planted_value == 1


def test_bounded_degree_respects_bound() -> None:
    """No vertex exceeds the degree bound."""
    graph = generate("bounded-degree", 100, 140, seed=5, max_degree=3).graph
    assert int(graph.degrees.max()) <= 3


def test_power_law_is_skewed() -> None:
    """The heaviest vertex of a power-law graph has far more than the average degree."""
    graph = generate("power-law", 500, 1000, seed=2).graph
    assert int(graph.degrees.max()) > 4 * graph.degrees.mean()


@pytest.mark.parametrize(
    ("kind", "n", "m", "options"),
    [
        ("unknown", 10, 10, {}),
        ("uniform-random", -1, 0, {}),
        ("uniform-random", 1, 1, {}),
        ("planted-dicut", 10, 10, {"plant_fraction": 1.5}),
        ("power-law", 10, 10, {"exponent": 1.0}),
        ("bounded-degree", 10, 16, {"max_degree": 3}),
        ("bounded-degree", 10, 1, {"max_degree": 0}),
    ],
)
def test_invalid_requests(kind: str, n: int, m: int, options: dict) -> None:
    """Invalid parameters raise errors.

    Parameters:
        kind: Generator kind (parametrized).
        n: Vertex count (parametrized).
        m: Edge count (parametrized).
        options: Keyword options (parametrized).
    """
    with pytest.raises(InvalidGraphError):
        generate(kind, n, m, **options)


def test_empty_instance() -> None:
    """Zero edges are allowed."""
    instance = generate("planted-dicut", 5, 0)
    assert instance.graph.m == 0
    assert instance.planted_value is None
