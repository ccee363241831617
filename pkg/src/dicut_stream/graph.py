"""Directed multigraphs, dicut evaluation and Max-DICUT oracles.

Vertices are dense integer ids in `[0, n)`. The order of the edge list is the
stream order and is preserved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from operator import itemgetter
from pathlib import Path
from typing import TYPE_CHECKING, Union

import networkx as nx
import numpy as np

from dicut_stream.exceptions import (
    EdgeListParseError,
    EmptyGraphError,
    InstanceTooLargeError,
    InvalidGraphError,
)
from dicut_stream.logger import get_logger

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator, Mapping

logger = get_logger(__name__)

Edge = tuple[int, int]
Value = Union[float, Fraction]

DEFAULT_EXACT_CAP = 26
"""Largest vertex count the exact oracle accepts by default."""

_BLOCK_ENTRIES = 1 << 21


@dataclass(frozen=True)
class DirectedMultigraph:
    """A directed multigraph without self-loops."""

    n: int
    """Number of vertices."""
    edges: tuple[Edge, ...]
    """Edges as `(tail, head)` pairs, in stream order."""
    vertex_labels: tuple[str, ...] | None = None
    """Original labels, when the graph was read from arbitrary labels."""

    def __post_init__(self) -> None:
        edges = tuple((int(tail), int(head)) for tail, head in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.n < 0:
            raise InvalidGraphError(f"vertex count must be non-negative, got {self.n}")
        for index, (tail, head) in enumerate(edges):
            if not (0 <= tail < self.n and 0 <= head < self.n):
                raise InvalidGraphError(f"edge {index} ({tail}, {head}) has an endpoint outside [0, {self.n})")
            if tail == head:
                raise InvalidGraphError(f"edge {index} is a self-loop on vertex {tail}")
        if self.vertex_labels is not None and len(self.vertex_labels) != self.n:
            raise InvalidGraphError("vertex labels must cover every vertex")

    @property
    def m(self) -> int:
        """Number of edges."""
        return len(self.edges)

    @cached_property
    def tails(self) -> np.ndarray:
        """Tail of every edge, as an integer array."""
        return np.fromiter((tail for tail, _ in self.edges), dtype=np.int64, count=self.m)

    @cached_property
    def heads(self) -> np.ndarray:
        """Head of every edge, as an integer array."""
        return np.fromiter((head for _, head in self.edges), dtype=np.int64, count=self.m)

    @cached_property
    def out_degrees(self) -> np.ndarray:
        """Out-degree of every vertex."""
        return np.bincount(self.tails, minlength=self.n)

    @cached_property
    def in_degrees(self) -> np.ndarray:
        """In-degree of every vertex."""
        return np.bincount(self.heads, minlength=self.n)

    @cached_property
    def degrees(self) -> np.ndarray:
        """Total degree (in plus out, parallel edges counted) of every vertex."""
        return self.out_degrees + self.in_degrees

    @cached_property
    def network(self) -> nx.MultiDiGraph:
        """The graph as a networkx multigraph, keyed by stream position."""
        network = nx.MultiDiGraph()
        network.add_nodes_from(range(self.n))
        network.add_edges_from((tail, head, index) for index, (tail, head) in enumerate(self.edges))
        return network

    @cached_property
    def incidence(self) -> tuple[tuple[int, ...], ...]:
        """Indices of the edges incident on every vertex, in stream order."""
        network = self.network
        incident = (
            sorted([*network.out_edges(vertex, keys=True), *network.in_edges(vertex, keys=True)], key=itemgetter(2))
            for vertex in range(self.n)
        )
        return tuple(tuple(key for *_, key in edges) for edges in incident)

    def subgraph(self, vertices: Iterable[int]) -> tuple[DirectedMultigraph, list[int]]:
        """Return the induced subgraph on `vertices`, relabeled densely.

        Parameters:
            vertices: The vertices to keep.

        Returns:
            The subgraph, and the original id of every new vertex.
        """
        kept = sorted(set(vertices))
        position = {vertex: index for index, vertex in enumerate(kept)}
        induced = sorted(self.network.subgraph(kept).edges(keys=True), key=itemgetter(2))
        edges = tuple((position[tail], position[head]) for tail, head, _ in induced)
        return DirectedMultigraph(len(kept), edges), kept

    def relabel_dense(self) -> tuple[DirectedMultigraph, list[int]]:
        """Drop isolated vertices and relabel the rest densely.

        Returns:
            The relabeled graph, and the original id of every new vertex.
        """
        return self.subgraph(int(vertex) for vertex in np.flatnonzero(self.degrees))


@dataclass(frozen=True)
class Dicut:
    """An ordered bipartition, given by its left side."""

    left: frozenset[int]
    """Vertices in `L`; every other vertex is in `R`."""

    def __contains__(self, vertex: object) -> bool:
        return vertex in self.left

    @classmethod
    def from_bits(cls, bits: Iterable[int | bool]) -> Dicut:
        """Build a dicut from a 0/1 sequence indexed by vertex (1 means left)."""
        return cls(frozenset(vertex for vertex, bit in enumerate(bits) if bit))

    def mask(self, n: int) -> np.ndarray:
        """Boolean membership array over `[0, n)`."""
        in_left = np.zeros(n, dtype=bool)
        members = [vertex for vertex in self.left if 0 <= vertex < n]
        in_left[members] = True
        return in_left


@dataclass(frozen=True)
class FractionalAssignment:
    """A map from vertices to probabilities of landing in `L`."""

    rho: Mapping[int, Value]
    """Probability of each vertex being put in `L`."""

    def __post_init__(self) -> None:
        for vertex, value in self.rho.items():
            if not 0 <= value <= 1:
                raise InvalidGraphError(f"assignment of vertex {vertex} is {value}, outside [0, 1]")

    def __getitem__(self, vertex: int) -> Value:
        return self.rho[vertex]

    @classmethod
    def from_dicut(cls, cut: Dicut, n: int) -> FractionalAssignment:
        """The 0/1 assignment putting exactly the left side of `cut` in `L`."""
        return cls({vertex: int(vertex in cut) for vertex in range(n)})

    def values(self, n: int) -> list[Value]:
        """Assignment values for vertices `0..n-1`."""
        try:
            return [self.rho[vertex] for vertex in range(n)]
        except KeyError as error:
            raise InvalidGraphError(f"assignment is undefined on vertex {error.args[0]}") from error


def dicut_value(graph: DirectedMultigraph, cut: Dicut, *, exact: bool = False) -> Value:
    """Fraction of edges going from `L` to `R`.

    Parameters:
        graph: The graph.
        cut: The dicut.
        exact: Return a `Fraction` instead of a float.

    Raises:
        EmptyGraphError: When the graph has no edge.

    Returns:
        The dicut value.
    """
    if graph.m == 0:
        raise EmptyGraphError
    in_left = cut.mask(graph.n)
    crossing = int(np.count_nonzero(in_left[graph.tails] & ~in_left[graph.heads]))
    return Fraction(crossing, graph.m) if exact else crossing / graph.m


def expected_dicut(graph: DirectedMultigraph, rho: FractionalAssignment, *, exact: bool = False) -> Value:
    """Expected dicut value when every vertex joins `L` independently with probability `rho`.

    Parameters:
        graph: The graph.
        rho: The fractional assignment.
        exact: Sum with `Fraction` arithmetic.

    Raises:
        EmptyGraphError: When the graph has no edge.

    Returns:
        The sum of `rho(u) * (1 - rho(v))` over edges `u -> v`, divided by `m`.
    """
    if graph.m == 0:
        raise EmptyGraphError
    values = rho.values(graph.n)
    if exact:
        total = sum(
            (Fraction(values[tail]) * (1 - Fraction(values[head])) for tail, head in graph.edges),
            Fraction(0),
        )
        return total / graph.m
    array = np.asarray(values, dtype=float)
    return float(np.sum(array[graph.tails] * (1.0 - array[graph.heads]))) / graph.m


def _bit_matrix(width: int) -> np.ndarray:
    masks = np.arange(1 << width, dtype=np.int64)
    return ((masks[:, None] >> np.arange(width, dtype=np.int64)) & 1).astype(float)


def _internal_values(bits: np.ndarray, pairs: list[tuple[int, int, int]]) -> np.ndarray:
    values = np.zeros(bits.shape[0])
    for tail, head, weight in pairs:
        values += weight * bits[:, tail] * (1.0 - bits[:, head])
    return values


def max_dicut_exact(
    graph: DirectedMultigraph,
    *,
    cap: int = DEFAULT_EXACT_CAP,
    exact: bool = False,
) -> tuple[Value, Dicut]:
    """Maximum dicut value by exhaustive search over all ordered bipartitions.

    The active vertices are split in two halves. For every assignment of the
    high half, the cut value is affine in the bits of the low half, so a whole
    block of assignments is evaluated with one matrix product.

    Parameters:
        graph: The graph.
        cap: Largest vertex count accepted.
        exact: Return the value as a `Fraction`.

    Raises:
        InstanceTooLargeError: When `graph.n > cap`.
        EmptyGraphError: When the graph has no edge.

    Returns:
        The maximum value and a dicut attaining it.
    """
    if graph.n > cap:
        raise InstanceTooLargeError(graph.n, cap)
    if graph.m == 0:
        raise EmptyGraphError

    active = [int(vertex) for vertex in np.flatnonzero(graph.degrees)]
    position = {vertex: index for index, vertex in enumerate(active)}
    low_width = (len(active) + 1) // 2
    high_width = len(active) - low_width

    keys, weights = np.unique(graph.tails * graph.n + graph.heads, return_counts=True)
    low_pairs: list[tuple[int, int, int]] = []
    high_pairs: list[tuple[int, int, int]] = []
    coef_base = np.zeros(low_width)
    coupling = np.zeros((high_width, low_width))
    const_base = np.zeros(high_width)
    for key, weight in zip(keys.tolist(), weights.tolist()):
        tail, head = position[key // graph.n], position[key % graph.n]
        if tail < low_width and head < low_width:
            low_pairs.append((tail, head, weight))
        elif tail >= low_width and head >= low_width:
            high_pairs.append((tail - low_width, head - low_width, weight))
        elif tail < low_width:
            # x_t (1 - x_h) with the head in the high half.
            coef_base[tail] += weight
            coupling[head - low_width, tail] -= weight
        else:
            # x_t (1 - x_h) with the tail in the high half.
            const_base[tail - low_width] += weight
            coupling[tail - low_width, head] -= weight

    low_bits = _bit_matrix(low_width)
    high_bits = _bit_matrix(high_width)
    low_values = _internal_values(low_bits, low_pairs)
    coefs = coef_base + high_bits @ coupling
    consts = _internal_values(high_bits, high_pairs) + high_bits @ const_base

    columns = low_bits.shape[0]
    batch = max(1, _BLOCK_ENTRIES // columns)
    best, best_high, best_low = -1.0, 0, 0
    for start in range(0, high_bits.shape[0], batch):
        block = consts[start : start + batch, None] + coefs[start : start + batch] @ low_bits.T + low_values[None, :]
        flat = int(np.argmax(block))
        value = float(block.flat[flat])
        if value > best + 0.5:
            best, best_high, best_low = value, start + flat // columns, flat % columns

    left = {active[bit] for bit in range(low_width) if best_low >> bit & 1}
    left |= {active[low_width + bit] for bit in range(high_width) if best_high >> bit & 1}
    crossing = round(best)
    value_out: Value = Fraction(crossing, graph.m) if exact else crossing / graph.m
    return value_out, Dicut(frozenset(left))


def max_dicut_localsearch(
    graph: DirectedMultigraph,
    *,
    restarts: int = 8,
    seed: int = 0,
) -> tuple[float, Dicut]:
    """Best 1-flip local optimum over several restarts.

    The first restart starts from the degree-bias assignment (a vertex is put in
    `L` iff its out-degree exceeds its in-degree), the others from uniformly
    random assignments.

    Parameters:
        graph: The graph.
        restarts: Number of local searches.
        seed: Seed of the random restarts.

    Raises:
        EmptyGraphError: When the graph has no edge.

    Returns:
        The best value found and its dicut. The value is a lower bound on Max-DICUT.
    """
    if graph.m == 0:
        raise EmptyGraphError
    rng = np.random.default_rng(seed)
    successors, predecessors = graph.network.succ, graph.network.pred

    best_count, best_side = -1, [False] * graph.n
    for restart in range(max(1, restarts)):
        if restart == 0:
            side = (graph.out_degrees > graph.in_degrees).tolist()
        else:
            side = (rng.random(graph.n) < 0.5).tolist()  # noqa: PLR2004
        count = sum(1 for tail, head in graph.edges if side[tail] and not side[head])
        improved = True
        while improved:
            improved = False
            for vertex in rng.permutation(graph.n).tolist():
                # Parallel edges are keyed separately, so they weigh by multiplicity.
                to_right = sum(len(keys) for other, keys in successors[vertex].items() if not side[other])
                from_left = sum(len(keys) for other, keys in predecessors[vertex].items() if side[other])
                gain = from_left - to_right if side[vertex] else to_right - from_left
                if gain > 0:
                    side[vertex] = not side[vertex]
                    count += gain
                    improved = True
        logger.debug(f"local search restart {restart}: {count}/{graph.m} edges cut")
        if count > best_count:
            best_count, best_side = count, side
    return best_count / graph.m, Dicut.from_bits(best_side)


def _records(lines: Iterable[str]) -> Iterator[tuple[int, list[str]]]:
    for lineno, line in enumerate(lines, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, stripped.split()


def _parse_header(records: Iterator[tuple[int, list[str]]]) -> tuple[int, int]:
    try:
        lineno, fields = next(records)
    except StopIteration:
        raise EdgeListParseError("missing 'n m' header") from None
    if len(fields) != 2:  # noqa: PLR2004
        raise EdgeListParseError("header must be 'n m'", lineno)
    try:
        n, m = int(fields[0]), int(fields[1])
    except ValueError:
        raise EdgeListParseError("header must hold two integers", lineno) from None
    if n < 0 or m < 0:
        raise EdgeListParseError("header values must be non-negative", lineno)
    return n, m


def _integer_id(token: str, n: int) -> int | None:
    try:
        value = int(token)
    except ValueError:
        return None
    return value if 0 <= value < n else None


def iter_edge_list(lines: Iterable[str]) -> tuple[int, int, Iterator[Edge]]:
    """Parse the header of an edge list and lazily yield its edges.

    Vertex ids must be integers in `[0, n)`; use [`parse_edge_list`][dicut_stream.graph.parse_edge_list]
    for arbitrary labels.

    Parameters:
        lines: The text lines.

    Raises:
        EdgeListParseError: When the header is malformed.

    Returns:
        The declared vertex count, the declared edge count, and an edge iterator.
    """
    records = _records(lines)
    n, m = _parse_header(records)

    def edges() -> Iterator[Edge]:
        count = 0
        for lineno, fields in records:
            if len(fields) != 2:  # noqa: PLR2004
                raise EdgeListParseError("edge lines must be 'u v'", lineno)
            tail, head = _integer_id(fields[0], n), _integer_id(fields[1], n)
            if tail is None or head is None:
                raise EdgeListParseError(f"vertex ids must be integers in [0, {n})", lineno)
            if tail == head:
                raise EdgeListParseError(f"self-loop on vertex {tail}", lineno)
            count += 1
            yield tail, head
        if count != m:
            raise EdgeListParseError(f"header declares {m} edges, found {count}")

    return n, m, edges()


def parse_edge_list(text: str) -> DirectedMultigraph:
    """Parse edge-list text into a graph.

    When every token is an integer in `[0, n)`, tokens are used as vertex ids.
    Otherwise all tokens are treated as labels and remapped densely in order of
    first appearance; the mapping is recorded in `vertex_labels`.

    Parameters:
        text: The edge-list text.

    Raises:
        EdgeListParseError: When the text is malformed.

    Returns:
        The graph.
    """
    records = _records(text.splitlines())
    n, m = _parse_header(records)
    raw: list[tuple[int, str, str]] = []
    for lineno, fields in records:
        if len(fields) != 2:  # noqa: PLR2004
            raise EdgeListParseError("edge lines must be 'u v'", lineno)
        raw.append((lineno, fields[0], fields[1]))
    if len(raw) != m:
        raise EdgeListParseError(f"header declares {m} edges, found {len(raw)}")

    remap = any(_integer_id(token, n) is None for _, tail, head in raw for token in (tail, head))
    labels: dict[str, int] = {}
    edges: list[Edge] = []
    for lineno, tail_token, head_token in raw:
        if remap:
            tail = labels.setdefault(tail_token, len(labels))
            head = labels.setdefault(head_token, len(labels))
        else:
            tail, head = int(tail_token), int(head_token)
        if tail == head:
            raise EdgeListParseError(f"self-loop on vertex {tail_token}", lineno)
        edges.append((tail, head))
    if not remap:
        return DirectedMultigraph(n, tuple(edges))
    if len(labels) > n:
        raise EdgeListParseError(f"found {len(labels)} distinct labels but the header declares {n} vertices")
    logger.debug(f"remapped {len(labels)} vertex labels to dense ids")
    names = list(labels) + [""] * (n - len(labels))
    return DirectedMultigraph(n, tuple(edges), vertex_labels=tuple(names))


def read_edge_list(path: str | Path) -> DirectedMultigraph:
    """Read a graph from an edge-list file (see [`parse_edge_list`][dicut_stream.graph.parse_edge_list])."""
    return parse_edge_list(Path(path).read_text(encoding="utf-8"))


def format_edge_list(graph: DirectedMultigraph, *, comments: Iterable[str] = ()) -> str:
    """Render a graph in the edge-list format.

    Parameters:
        graph: The graph.
        comments: Lines written after the header, each prefixed with `# `.

    Returns:
        The text, ending with a newline.
    """
    lines = [f"{graph.n} {graph.m}"]
    lines.extend(f"# {comment}" for comment in comments)
    lines.extend(f"{tail} {head}" for tail, head in graph.edges)
    return "\n".join(lines) + "\n"


def write_edge_list(graph: DirectedMultigraph, path: str | Path, *, comments: Iterable[str] = ()) -> None:
    """Write a graph to an edge-list file (see [`format_edge_list`][dicut_stream.graph.format_edge_list])."""
    Path(path).write_text(format_edge_list(graph, comments=comments), encoding="utf-8")
