"""Doubly rooted neighborhoods of edges, their isomorphism types and type distributions."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from operator import itemgetter
from pathlib import Path
from typing import TYPE_CHECKING

import networkx as nx
import numpy as np

from dicut_stream.exceptions import (
    DegreeBoundExceededError,
    EmptyGraphError,
    EmptySampleError,
    MissingDegreeError,
    ParameterError,
)
from dicut_stream.graph import DirectedMultigraph, Edge, Value
from dicut_stream.logger import get_logger

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator, Mapping, Sequence

logger = get_logger(__name__)

_WORD = np.dtype(">u4")


@dataclass(frozen=True)
class BallGraph:
    """The radius-`ell` labeled ball around an edge, rooted at its tail then its head."""

    labels: tuple[int, ...]
    """Label of every local vertex."""
    edges: tuple[Edge, ...]
    """Edges between local vertices, parallel edges kept."""
    roots: tuple[int, int]
    """Local indices of the tail root and the head root."""
    ell: int
    """Radius."""
    degree_bound: int
    """Degree bound `D` of the host graph."""
    complete: tuple[bool, ...]
    """Whether all neighbors of a vertex in the host graph are present (distance at most `ell - 1`)."""
    origin: tuple[int, ...] | None = field(default=None, compare=False)
    """Host-graph id of every local vertex, when extracted from a graph."""

    @property
    def size(self) -> int:
        """Number of vertices."""
        return len(self.labels)

    @cached_property
    def network(self) -> nx.MultiDiGraph:
        """The ball as a networkx multigraph.

        Every node carries its `label`, its `complete` flag and its `role`:
        0 for the tail root, 1 for the head root, 2 otherwise.
        """
        network = nx.MultiDiGraph()
        for vertex, (label, complete) in enumerate(zip(self.labels, self.complete)):
            role = self.roots.index(vertex) if vertex in self.roots else 2
            network.add_node(vertex, label=label, complete=complete, role=role)
        network.add_edges_from(self.edges)
        return network


@dataclass(frozen=True)
class TypeId:
    """Canonical identifier of the isomorphism class of a ball."""

    key: bytes
    """Canonical serialization."""
    size: int
    """Number of vertices of the type."""

    @property
    def hex(self) -> str:
        """Hexadecimal form of the key."""
        return self.key.hex()

    @classmethod
    def from_hex(cls, text: str) -> TypeId:
        """Rebuild an identifier from its hexadecimal form."""
        key = bytes.fromhex(text)
        return cls(key, int(np.frombuffer(key[: _WORD.itemsize], dtype=_WORD)[0]))

    def to_ball(self) -> BallGraph:
        """Decode the canonical representative; vertices are in canonical order, roots first."""
        words = np.frombuffer(self.key, dtype=_WORD).tolist()
        size, ell, bound = words[0], words[1], words[2]
        labels = tuple(words[3 : 3 + size])
        complete = tuple(bool(flag) for flag in words[3 + size : 3 + 2 * size])
        edge_count = words[3 + 2 * size]
        flat = words[4 + 2 * size : 4 + 2 * size + 2 * edge_count]
        edges = tuple(zip(flat[::2], flat[1::2]))
        return BallGraph(labels, edges, (0, 1), ell, bound, complete)

    def __repr__(self) -> str:
        return f"TypeId(size={self.size}, hex={self.hex[:16]}...)"


def _undirected_distances(graph: DirectedMultigraph, sources: Iterable[int], limit: int) -> dict[int, int]:
    undirected = graph.network.to_undirected(as_view=True)
    return nx.multi_source_dijkstra_path_length(undirected, set(sources), cutoff=limit)


def ball_extract(graph: DirectedMultigraph, labels: Sequence[int], ell: int, degree_bound: int, e: int) -> BallGraph:
    """Extract the labeled ball of radius `ell` around edge `e`.

    Parameters:
        graph: The host graph.
        labels: Label of every host vertex.
        ell: Radius.
        degree_bound: Maximum degree allowed inside the ball.
        e: Index of the root edge.

    Raises:
        DegreeBoundExceededError: When a vertex of the ball has degree above `degree_bound`.

    Returns:
        The induced subgraph on vertices within distance `ell` of the roots.
    """
    tail, head = graph.edges[e]
    distance = _undirected_distances(graph, (tail, head), ell)
    degrees = graph.degrees
    for vertex in distance:
        if degrees[vertex] > degree_bound:
            raise DegreeBoundExceededError(vertex, int(degrees[vertex]), degree_bound)
    members = list(distance)
    local = {vertex: index for index, vertex in enumerate(members)}
    induced = sorted(graph.network.subgraph(members).edges(keys=True), key=itemgetter(2))
    edges = tuple((local[tail], local[head]) for tail, head, _ in induced)
    return BallGraph(
        labels=tuple(int(labels[vertex]) for vertex in members),
        edges=edges,
        roots=(local[tail], local[head]),
        ell=ell,
        degree_bound=degree_bound,
        complete=tuple(distance[vertex] <= ell - 1 for vertex in members),
        origin=tuple(members),
    )


def _ball_distances(network: nx.MultiGraph, root: int) -> list[int]:
    # Vertices the root cannot reach sit one past the farthest possible distance.
    size = network.number_of_nodes()
    reached = nx.single_source_shortest_path_length(network, root)
    return [reached.get(vertex, size) for vertex in range(size)]


def _ranks(signatures: Sequence[object]) -> list[int]:
    order = {signature: rank for rank, signature in enumerate(sorted(set(signatures)))}  # type: ignore[type-var]
    return [order[signature] for signature in signatures]


class _Canonizer:
    """Individualization-refinement search for the minimal serialization of a ball."""

    def __init__(self, ball: BallGraph) -> None:
        self.ball = ball
        size = ball.size
        network = ball.network
        # One entry per parallel edge.
        self.out_nbrs = [[head for _, head in network.out_edges(vertex)] for vertex in range(size)]
        self.in_nbrs = [[tail for tail, _ in network.in_edges(vertex)] for vertex in range(size)]
        undirected = network.to_undirected(as_view=True)
        first, second = (_ball_distances(undirected, root) for root in ball.roots)
        roles = nx.get_node_attributes(network, "role")
        self.initial = _ranks(
            [
                (
                    roles[vertex],
                    ball.labels[vertex],
                    ball.complete[vertex],
                    len(self.in_nbrs[vertex]),
                    len(self.out_nbrs[vertex]),
                    first[vertex],
                    second[vertex],
                )
                for vertex in range(size)
            ],
        )
        self.neighborhood = [
            (tuple(sorted(self.out_nbrs[vertex])), tuple(sorted(self.in_nbrs[vertex]))) for vertex in range(size)
        ]

    def refine(self, colors: list[int]) -> list[int]:
        classes = len(set(colors))
        while True:
            colors = _ranks(
                [
                    (
                        colors[vertex],
                        tuple(sorted(colors[other] for other in self.out_nbrs[vertex])),
                        tuple(sorted(colors[other] for other in self.in_nbrs[vertex])),
                    )
                    for vertex in range(len(colors))
                ],
            )
            refined = len(set(colors))
            if refined == classes:
                return colors
            classes = refined

    def serialize(self, colors: list[int]) -> tuple[tuple[int, ...], list[int]]:
        order = sorted(range(len(colors)), key=colors.__getitem__)
        position = {vertex: index for index, vertex in enumerate(order)}
        ball = self.ball
        edges = sorted((position[tail], position[head]) for tail, head in ball.edges)
        words = [ball.size, ball.ell, ball.degree_bound]
        words.extend(ball.labels[vertex] for vertex in order)
        words.extend(int(ball.complete[vertex]) for vertex in order)
        words.append(len(edges))
        for tail, head in edges:
            words.extend((tail, head))
        return tuple(words), order

    def search(self, colors: list[int]) -> tuple[tuple[int, ...], list[int]]:
        colors = self.refine(colors)
        members: dict[int, list[int]] = {}
        for vertex, color in enumerate(colors):
            members.setdefault(color, []).append(vertex)
        cells = [cell for _, cell in sorted(members.items()) if len(cell) > 1]
        if not cells:
            return self.serialize(colors)
        # Twins (same color, same neighbors) are interchangeable, one of them is enough.
        seen: set[tuple[tuple[int, ...], tuple[int, ...]]] = set()
        candidates = []
        for vertex in cells[0]:
            if self.neighborhood[vertex] in seen:
                continue
            seen.add(self.neighborhood[vertex])
            split = [2 * color + (0 if other == vertex else 1) for other, color in enumerate(colors)]
            candidates.append(self.search(split))
        return min(candidates, key=lambda candidate: candidate[0])


def canonical_form(ball: BallGraph) -> tuple[TypeId, list[int]]:
    """Canonical identifier of a ball, and its canonical vertex order.

    Parameters:
        ball: The ball.

    Returns:
        The type, and the local vertex at every canonical position.
    """
    canonizer = _Canonizer(ball)
    words, order = canonizer.search(canonizer.initial)
    return TypeId(np.asarray(words, dtype=_WORD).tobytes(), ball.size), order


def canonicalize(ball: BallGraph) -> TypeId:
    """Canonical identifier of the isomorphism class of a ball.

    The identifier is the lexicographically smallest serialization over the
    vertex orderings that put the tail root first and the head root second.
    Orderings are enumerated by color refinement on labels, completeness,
    degrees and root distances, individualizing one vertex of the first
    non-trivial class at a time.
    """
    return canonical_form(ball)[0]


@dataclass(frozen=True)
class TypeDistribution:
    """A probability mass function over types."""

    masses: Mapping[TypeId, Value]
    """Mass of every type in the support."""

    def __post_init__(self) -> None:
        if any(mass < 0 for mass in self.masses.values()):
            raise ParameterError("type masses must be non-negative")
        total = sum(self.masses.values())
        if abs(total - 1) > 1e-9:  # noqa: PLR2004
            raise ParameterError(f"type masses sum to {total}, not 1")

    def __getitem__(self, type_id: TypeId) -> Value:
        return self.masses.get(type_id, 0)

    def __iter__(self) -> Iterator[TypeId]:
        return iter(self.masses)

    def __len__(self) -> int:
        return len(self.masses)

    def items(self) -> Iterable[tuple[TypeId, Value]]:
        """Types and their masses."""
        return self.masses.items()

    def to_csv(self, path: str | Path) -> None:
        """Write `type-id-hex,size,mass` rows, sorted by type key."""
        with Path(path).open("w", encoding="utf-8", newline="") as file:
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow(["type-id-hex", "size", "mass"])
            for type_id in sorted(self.masses, key=lambda type_id: type_id.key):
                writer.writerow([type_id.hex, type_id.size, repr(float(self.masses[type_id]))])

    @classmethod
    def from_csv(cls, path: str | Path) -> TypeDistribution:
        """Read a distribution written by [`to_csv`][dicut_stream.neighborhoods.TypeDistribution.to_csv]."""
        with Path(path).open(encoding="utf-8", newline="") as file:
            rows = list(csv.DictReader(file))
        return cls({TypeId(bytes.fromhex(row["type-id-hex"]), int(row["size"])): float(row["mass"]) for row in rows})


def edge_type_distribution(
    graph: DirectedMultigraph,
    labels: Sequence[int],
    ell: int,
    degree_bound: int,
    *,
    exact: bool = False,
) -> TypeDistribution:
    """Distribution of the type of a uniformly random edge.

    Parameters:
        graph: The graph, of maximum degree at most `degree_bound`.
        labels: Label of every vertex.
        ell: Radius.
        degree_bound: Degree bound.
        exact: Use `Fraction` masses.

    Raises:
        EmptyGraphError: When the graph has no edge.

    Returns:
        The edge-type distribution.
    """
    if graph.m == 0:
        raise EmptyGraphError
    counts = Counter(canonicalize(ball_extract(graph, labels, ell, degree_bound, e)) for e in range(graph.m))
    if exact:
        return TypeDistribution({type_id: Fraction(count, graph.m) for type_id, count in counts.items()})
    return TypeDistribution({type_id: count / graph.m for type_id, count in counts.items()})


def tv_distance(first: TypeDistribution, second: TypeDistribution) -> Value:
    """Total variation distance: half the L1 distance over the union of supports."""
    support = set(first) | set(second)
    return sum((abs(first[type_id] - second[type_id]) for type_id in support), 0) / 2


def rescaled_distribution(counts: Mapping[TypeId, int], p: float | Fraction) -> TypeDistribution:
    """Unbias type counts from a vertex sample taken with probability `p`.

    Every count is weighted by `p ** -size`. Integer and `Fraction` values of `p`
    give exact masses; floats are rescaled in log space.

    Parameters:
        counts: Certified count of every type.
        p: Vertex sampling probability.

    Raises:
        ParameterError: When `p` is outside `(0, 1]`.
        EmptySampleError: When every count is zero.

    Returns:
        The rescaled distribution.
    """
    if not 0 < p <= 1:
        raise ParameterError(f"sampling probability must be in (0, 1], got {p}")
    positive = {type_id: count for type_id, count in counts.items() if count > 0}
    if not positive:
        raise EmptySampleError
    if isinstance(p, (int, Fraction)):
        weights = {type_id: count / Fraction(p) ** type_id.size for type_id, count in positive.items()}
        total = sum(weights.values())
        return TypeDistribution({type_id: weight / total for type_id, weight in weights.items()})
    types = list(positive)
    logs = np.array([math.log(positive[type_id]) - type_id.size * math.log(p) for type_id in types])
    scaled = np.exp(logs - logs.max())
    masses = scaled / scaled.sum()
    return TypeDistribution(dict(zip(types, masses.tolist())))


def count_certified_types(
    graph: DirectedMultigraph,
    labels: Sequence[int],
    ell: int,
    degree_bound: int,
    degree_map: Sequence[int] | Mapping[int, int],
) -> Counter[TypeId]:
    """Count the types of edges whose whole ball is certified to be present.

    An edge counts when every vertex within distance `ell - 1` of its endpoints
    has the same degree in `graph` as recorded in `degree_map`.

    Parameters:
        graph: The sampled graph.
        labels: Label of every vertex of `graph`.
        ell: Radius.
        degree_bound: Degree bound.
        degree_map: Recorded full degree of every vertex of `graph`.

    Returns:
        The certified count of every type.
    """
    degrees = graph.degrees.tolist()
    certified = []
    for vertex in range(graph.n):
        try:
            certified.append(degrees[vertex] == degree_map[vertex])
        except (KeyError, IndexError):
            raise MissingDegreeError(vertex) from None
    counts: Counter[TypeId] = Counter()
    for e, (tail, head) in enumerate(graph.edges):
        inner = _undirected_distances(graph, (tail, head), ell - 1) if ell >= 1 else {}
        if all(certified[vertex] for vertex in inner):
            counts[canonicalize(ball_extract(graph, labels, ell, degree_bound, e))] += 1
    return counts


def sampled_type_counts(
    graph: DirectedMultigraph,
    sampled: Iterable[int],
    labels: Sequence[int],
    ell: int,
    degree_bound: int,
    degree_map: Mapping[int, int],
) -> Counter[TypeId]:
    """Certified type counts of the subgraph induced by a vertex sample.

    Parameters:
        graph: The full graph.
        sampled: The sampled vertices.
        labels: Label of every vertex of the full graph.
        ell: Radius.
        degree_bound: Degree bound.
        degree_map: Full-graph degree of every sampled vertex.

    Raises:
        MissingDegreeError: When a sampled vertex has no recorded degree.

    Returns:
        The certified count of every type.
    """
    subgraph, kept = graph.subgraph(sampled)
    try:
        local_degrees = [degree_map[vertex] for vertex in kept]
    except KeyError as error:
        raise MissingDegreeError(error.args[0]) from None
    counts = count_certified_types(subgraph, [labels[vertex] for vertex in kept], ell, degree_bound, local_degrees)
    logger.debug(f"{sum(counts.values())} of {subgraph.m} sampled edges certified, {len(counts)} types")
    return counts
