"""Tests for the `neighborhoods` module."""

from __future__ import annotations

import itertools
import operator
from fractions import Fraction
from typing import TYPE_CHECKING

import networkx as nx
import numpy as np
import pytest

from dicut_stream.exceptions import (
    DegreeBoundExceededError,
    EmptyGraphError,
    EmptySampleError,
    MissingDegreeError,
    ParameterError,
)
from dicut_stream.generators import generate
from dicut_stream.graph import DirectedMultigraph
from dicut_stream.neighborhoods import (
    BallGraph,
    TypeDistribution,
    TypeId,
    ball_extract,
    canonicalize,
    count_certified_types,
    edge_type_distribution,
    rescaled_distribution,
    sampled_type_counts,
    tv_distance,
)

if TYPE_CHECKING:
    from pathlib import Path


def _path(length: int) -> DirectedMultigraph:
    return DirectedMultigraph(length, tuple((vertex, vertex + 1) for vertex in range(length - 1)))


def _renumber(ball: BallGraph, permutation: list[int]) -> BallGraph:
    inverse = [0] * ball.size
    for old, new in enumerate(permutation):
        inverse[new] = old
    return BallGraph(
        labels=tuple(ball.labels[inverse[new]] for new in range(ball.size)),
        edges=tuple((permutation[tail], permutation[head]) for tail, head in reversed(ball.edges)),
        roots=(permutation[ball.roots[0]], permutation[ball.roots[1]]),
        ell=ball.ell,
        degree_bound=ball.degree_bound,
        complete=tuple(ball.complete[inverse[new]] for new in range(ball.size)),
    )


def test_ball_of_path() -> None:
    """A radius-1 ball of a path holds the root edge and one neighbor on each side."""
    ball = ball_extract(_path(6), [0] * 6, 1, 2, 2)
    assert ball.size == 4
    assert len(ball.edges) == 3
    assert ball.origin is not None
    assert sorted(ball.origin) == [1, 2, 3, 4]
    assert (ball.origin[ball.roots[0]], ball.origin[ball.roots[1]]) == (2, 3)
    complete = {ball.origin[local] for local in range(ball.size) if ball.complete[local]}
    assert complete == {2, 3}


def test_ball_degree_bound(star: DirectedMultigraph) -> None:
    """High-degree vertices inside a ball are refused."""
    with pytest.raises(DegreeBoundExceededError):
        ball_extract(star, [0] * 6, 1, 3, 0)


@pytest.mark.parametrize("seed", range(10))
def test_canonical_form_ignores_numbering(seed: int) -> None:
    """Renumbering the vertices of a ball keeps its type.

    Parameters:
        seed: Seed of the graph, labels and permutation (parametrized).
    """
    rng = np.random.default_rng(seed)
    graph = generate("bounded-degree", 20, 26, seed=seed, max_degree=3).graph
    labels = rng.integers(0, 3, size=graph.n).tolist()
    ball = ball_extract(graph, labels, 2, 3, int(rng.integers(0, graph.m)))
    renumbered = _renumber(ball, rng.permutation(ball.size).tolist())
    assert canonicalize(ball) == canonicalize(renumbered)


@pytest.mark.parametrize(("seed", "colors"), [(seed, colors) for seed in range(4) for colors in (1, 2)])
def test_types_match_isomorphism(seed: int, colors: int) -> None:
    """Two balls share a type exactly when an isomorphism maps roots, labels and completeness onto each other.

    Parameters:
        seed: Seed of the graph (parametrized).
        colors: Number of distinct labels (parametrized).
    """
    graph = generate("bounded-degree", 10, 12, seed=seed, max_degree=3).graph
    labels = [vertex % colors for vertex in range(graph.n)]
    balls = [ball_extract(graph, labels, 1, 3, e) for e in range(graph.m)]
    types = [canonicalize(ball) for ball in balls]
    for first, second in itertools.combinations(range(graph.m), 2):
        isomorphic = nx.is_isomorphic(balls[first].network, balls[second].network, node_match=operator.eq)
        assert (types[first] == types[second]) == isomorphic
    for ball, type_id in zip(balls, types):
        assert nx.is_isomorphic(ball.network, type_id.to_ball().network, node_match=operator.eq)


def test_ball_network_attributes() -> None:
    """The networkx view of a ball carries roles, labels and completeness."""
    ball = ball_extract(_path(6), [0, 1, 2, 3, 4, 5], 1, 2, 2)
    network = ball.network
    assert network.number_of_edges() == len(ball.edges)
    assert network.nodes[ball.roots[0]] == {"label": 2, "complete": True, "role": 0}
    assert network.nodes[ball.roots[1]] == {"label": 3, "complete": True, "role": 1}
    assert {network.nodes[local]["role"] for local in range(ball.size)} == {0, 1, 2}


def test_types_separate_labels_and_orientation() -> None:
    """Labels and the direction of the root edge are part of the type."""
    graph = DirectedMultigraph(3, ((0, 1), (1, 2)))
    plain = canonicalize(ball_extract(graph, [0, 0, 0], 1, 2, 0))
    assert plain != canonicalize(ball_extract(graph, [1, 0, 0], 1, 2, 0))
    assert plain != canonicalize(ball_extract(graph, [0, 0, 0], 1, 2, 1))


def test_type_id_round_trips() -> None:
    """A type decodes to a ball of the same type, and survives hex encoding."""
    graph = generate("bounded-degree", 15, 18, seed=1, max_degree=3).graph
    type_id = canonicalize(ball_extract(graph, list(range(graph.n)), 2, 3, 4))
    assert TypeId.from_hex(type_id.hex) == type_id
    decoded = type_id.to_ball()
    assert decoded.size == type_id.size
    assert decoded.roots == (0, 1)
    assert canonicalize(decoded) == type_id


def test_cycle_has_one_edge_type() -> None:
    """Every edge of an unlabeled directed cycle looks the same."""
    cycle = DirectedMultigraph(6, tuple((vertex, (vertex + 1) % 6) for vertex in range(6)))
    distribution = edge_type_distribution(cycle, [0] * 6, 2, 2, exact=True)
    assert len(distribution) == 1
    assert list(distribution.masses.values()) == [Fraction(1)]


def test_path_edge_types() -> None:
    """The two end edges of a path differ from each other, the inner edges share a type."""
    distribution = edge_type_distribution(_path(5), [0] * 5, 1, 2, exact=True)
    assert sorted(distribution.masses.values()) == [Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)]


def test_empty_graph_has_no_distribution() -> None:
    """The edge-type distribution needs edges."""
    with pytest.raises(EmptyGraphError):
        edge_type_distribution(DirectedMultigraph(2, ()), [0, 0], 1, 2)


def test_tv_distance() -> None:
    """Total variation is 0 on equal and 1 on disjoint distributions."""
    first, second, third = TypeId(b"a", 2), TypeId(b"b", 2), TypeId(b"c", 3)
    mixed = TypeDistribution({first: Fraction(1, 2), second: Fraction(1, 2)})
    assert tv_distance(mixed, mixed) == 0
    assert tv_distance(mixed, TypeDistribution({third: Fraction(1)})) == 1
    assert tv_distance(mixed, TypeDistribution({first: Fraction(1)})) == Fraction(1, 2)


def test_distribution_must_sum_to_one() -> None:
    """Masses are validated."""
    with pytest.raises(ParameterError):
        TypeDistribution({TypeId(b"a", 2): 0.5})
    with pytest.raises(ParameterError):
        TypeDistribution({TypeId(b"a", 2): 1.5, TypeId(b"b", 2): -0.5})


def test_rescaling_weights_by_size() -> None:
    """Larger types are weighted up by `p ** -size`."""
    small, large = TypeId(b"s", 2), TypeId(b"l", 3)
    exact = rescaled_distribution({small: 1, large: 1}, Fraction(1, 2))
    assert exact[small] == Fraction(1, 3)
    assert exact[large] == Fraction(2, 3)
    approximate = rescaled_distribution({small: 1, large: 1, TypeId(b"z", 4): 0}, 0.5)
    assert approximate[large] == pytest.approx(2 / 3)
    assert len(approximate) == 2


@pytest.mark.parametrize("p", [0, 1.5, -0.1])
def test_rescaling_probability_range(p: float) -> None:
    """The sampling probability must lie in `(0, 1]`.

    Parameters:
        p: Sampling probability (parametrized).
    """
    with pytest.raises(ParameterError):
        rescaled_distribution({TypeId(b"a", 2): 1}, p)


def test_rescaling_empty_sample() -> None:
    """Without certified edges there is nothing to rescale."""
    with pytest.raises(EmptySampleError):
        rescaled_distribution({TypeId(b"a", 2): 0}, 0.5)


def test_distribution_csv(tmp_path: Path) -> None:
    """Distributions are written and read as CSV."""
    graph = generate("bounded-degree", 30, 40, seed=2, max_degree=3).graph
    distribution = edge_type_distribution(graph, [0] * graph.n, 1, 3)
    path = tmp_path / "types.csv"
    distribution.to_csv(path)
    assert path.read_text().splitlines()[0] == "type-id-hex,size,mass"
    loaded = TypeDistribution.from_csv(path)
    assert set(loaded) == set(distribution)
    assert float(tv_distance(loaded, distribution)) == pytest.approx(0, abs=1e-12)


def test_certification_uses_recorded_degrees() -> None:
    """An edge counts only when the inner part of its ball has its full degree."""
    path = _path(4)
    counts = count_certified_types(path, [0] * 4, 1, 2, [1, 2, 2, 2])
    assert sum(counts.values()) == 2
    with pytest.raises(MissingDegreeError):
        count_certified_types(path, [0] * 4, 1, 2, [1, 2])


def test_full_sample_counts_every_edge() -> None:
    """Sampling every vertex certifies every edge."""
    graph = generate("bounded-degree", 30, 40, seed=4, max_degree=3).graph
    labels = [vertex % 2 for vertex in range(graph.n)]
    degrees = dict(enumerate(graph.degrees.tolist()))
    counts = sampled_type_counts(graph, range(graph.n), labels, 2, 3, degrees)
    assert sum(counts.values()) == graph.m
    assert rescaled_distribution(counts, 1).masses == edge_type_distribution(graph, labels, 2, 3, exact=True).masses


def test_sampled_counts_need_degrees() -> None:
    """Sampled vertices must have a recorded degree."""
    graph = _path(4)
    with pytest.raises(MissingDegreeError):
        sampled_type_counts(graph, [0, 1], [0] * 4, 1, 2, {0: 1})
