"""Tests for the `dense` module."""

from __future__ import annotations

from collections import Counter

import pytest

from dicut_stream.dense import CoreSet, EdgeReservoir, coreset_estimate, coreset_pass1, solve_coreset
from dicut_stream.exceptions import EmptyGraphError, ParameterError
from dicut_stream.generators import generate
from dicut_stream.graph import DirectedMultigraph
from dicut_stream.streams import EdgeStream


def test_reservoir_capacity() -> None:
    """Capacities must be positive."""
    with pytest.raises(ParameterError):
        EdgeReservoir(0)


def test_short_streams_are_kept_whole() -> None:
    """Up to the capacity every edge is kept, in order."""
    reservoir = EdgeReservoir(5, seed=1)
    for tail in range(3):
        reservoir.add(tail, tail + 1)
    coreset = reservoir.coreset()
    assert coreset.edges == ((0, 1), (1, 2), (2, 3))
    assert (coreset.m, coreset.k) == (3, 3)


def test_long_streams_are_sampled() -> None:
    """The reservoir never grows beyond its capacity and keeps stream edges only."""
    reservoir = EdgeReservoir(10, seed=2)
    edges = [(tail, tail + 1) for tail in range(100)]
    for tail, head in edges:
        reservoir.add(tail, head)
    coreset = reservoir.coreset()
    assert coreset.k == 10
    assert coreset.m == 100
    assert set(coreset.edges) <= set(edges)


def test_reservoir_is_uniform() -> None:
    """Every edge is equally likely to be kept."""
    kept: Counter[tuple[int, int]] = Counter()
    for seed in range(2000):
        reservoir = EdgeReservoir(1, seed=seed)
        for tail in range(4):
            reservoir.add(tail, tail + 1)
        kept.update(reservoir.coreset().edges)
    assert sum(kept.values()) == 2000
    assert all(400 <= count <= 600 for count in kept.values())
    assert len(kept) == 4


def test_reservoir_is_seeded() -> None:
    """Same seed, same core-set."""
    graph = generate("uniform-random", 50, 300, seed=0).graph
    first = coreset_pass1(EdgeStream.from_graph(graph), 40, seed=4)
    second = coreset_pass1(EdgeStream.from_graph(graph), 40, seed=4)
    assert first == second


def test_solve_coreset(triangle: DirectedMultigraph) -> None:
    """Core-sets are solved exactly under the cap and by local search above it."""
    coreset = coreset_pass1(EdgeStream.from_graph(triangle), 10)
    assert solve_coreset(coreset) == (pytest.approx(1 / 3), False)
    value, localsearch = solve_coreset(coreset, exact_cap=2)
    assert localsearch
    assert value == pytest.approx(1 / 3)


def test_solve_coreset_relabels_sparse_ids() -> None:
    """Vertex ids of the sampled edges need not be dense."""
    coreset = CoreSet(((1000, 7), (7, 1000), (1000, 3)), m=3, k=3)
    assert coreset_estimate(coreset) == pytest.approx(2 / 3)


def test_empty_coreset() -> None:
    """An empty core-set has no value."""
    with pytest.raises(EmptyGraphError):
        coreset_estimate(CoreSet((), m=0, k=0))


def test_planted_instances() -> None:
    """A sampled core-set of a planted instance keeps a high value."""
    instance = generate("planted-dicut", 100, 1000, seed=5, plant_fraction=0.9)
    value = coreset_estimate(coreset_pass1(EdgeStream.from_graph(instance.graph), 300, seed=5), seed=5)
    assert value >= 0.8
