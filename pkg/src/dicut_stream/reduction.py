"""Degree reduction: replace every vertex by degree-many copies and every edge by `d` sampled copies.

The sampling is local to each edge and tolerates approximate degrees for
high-degree vertices: a round whose drawn index falls outside the true degree
range is rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from dicut_stream.exceptions import EdgeListParseError, EmptyGraphError, InvalidDegreeOracleError, ParameterError
from dicut_stream.graph import (
    Dicut,
    DirectedMultigraph,
    FractionalAssignment,
    Value,
    expected_dicut,
    format_edge_list,
    parse_edge_list,
)
from dicut_stream.logger import get_logger
from dicut_stream.streams import Purpose, round_indices, substream

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = get_logger(__name__)

CAP_FACTOR = 11
"""Copies with more than `CAP_FACTOR * d` sampled edges lose all their edges."""


def rounds_for(epsilon_prime: float) -> int:
    """Sampling multiplicity `d = ceil(80 / epsilon_prime ** 2)`."""
    return math.ceil(80 / epsilon_prime**2)


@dataclass(frozen=True)
class ApproxDegrees:
    """Per-vertex degree estimates, exact below `n ** zeta`."""

    values: tuple[int, ...]
    """Estimated degree of every vertex."""
    zeta: float
    """Threshold exponent: vertices of degree below `n ** zeta` are exact."""
    epsilon_prime: float
    """Accuracy parameter: high degrees are within a factor `1 +- epsilon_prime / 100`."""

    def __getitem__(self, vertex: int) -> int:
        return self.values[vertex]

    def validate(self, graph: DirectedMultigraph) -> None:
        """Check the estimates against the true degrees of `graph`.

        Raises:
            InvalidDegreeOracleError: When a bound is violated.
        """
        if self.zeta <= 0:
            raise InvalidDegreeOracleError(f"zeta must be positive, got {self.zeta}")
        if not 0 < self.epsilon_prime <= 1:
            raise InvalidDegreeOracleError(f"epsilon' must be in (0, 1], got {self.epsilon_prime}")
        if len(self.values) != graph.n:
            raise InvalidDegreeOracleError(f"{len(self.values)} estimates for {graph.n} vertices")
        threshold = graph.n**self.zeta
        slack = self.epsilon_prime / 100
        for vertex, (estimate, degree) in enumerate(zip(self.values, graph.degrees.tolist())):
            if degree < threshold:
                if estimate != degree:
                    raise InvalidDegreeOracleError(f"vertex {vertex} has degree {degree} but estimate {estimate}")
            elif not (1 - slack) * degree <= estimate <= (1 + slack) * degree:
                raise InvalidDegreeOracleError(
                    f"estimate {estimate} of vertex {vertex} is off by more than {slack:.2%} from {degree}",
                )


def make_approx_degrees(
    graph: DirectedMultigraph,
    zeta: float,
    epsilon_prime: float,
    *,
    mode: str = "exact",
    seed: int = 0,
) -> ApproxDegrees:
    """Build degree estimates satisfying the [`ApproxDegrees`][dicut_stream.reduction.ApproxDegrees] contract.

    Parameters:
        graph: The graph.
        zeta: Threshold exponent.
        epsilon_prime: Accuracy parameter.
        mode: `exact` copies the true degrees; `perturbed` multiplies every degree
            at or above `n ** zeta` by an independent factor drawn uniformly from
            `[1 - epsilon_prime / 100, 1 + epsilon_prime / 100]` and rounds.
        seed: Seed of the perturbation.

    Returns:
        The estimates.
    """
    if mode not in {"exact", "perturbed"}:
        raise ParameterError(f"unknown degree oracle mode {mode!r}")
    degrees = graph.degrees.astype(float)
    if mode == "exact":
        return ApproxDegrees(tuple(graph.degrees.tolist()), zeta, epsilon_prime)
    slack = epsilon_prime / 100
    factors = substream(seed, Purpose.PERTURB).uniform(1 - slack, 1 + slack, size=graph.n)
    perturbed = np.rint(degrees * factors)
    # Rounding may step just outside the interval, the true degree is always inside it.
    perturbed = np.clip(perturbed, np.ceil((1 - slack) * degrees), np.floor((1 + slack) * degrees))
    high = degrees >= graph.n**zeta
    values = np.where(high, perturbed, degrees).astype(np.int64)
    return ApproxDegrees(tuple(values.tolist()), zeta, epsilon_prime)


class CopyVertex(NamedTuple):
    """The `index`-th copy of vertex `parent`."""

    parent: int
    index: int


@dataclass(frozen=True)
class ReducedGraph:
    """The bounded-degree graph over copy vertices."""

    graph: DirectedMultigraph
    """Graph over copy ids; copy `(v, i)` has id `offsets[v] + i`."""
    copies: tuple[CopyVertex, ...]
    """The copy vertex behind every id."""
    d: int
    """Sampling multiplicity."""
    degree_cap: int
    """Copies whose sampled degree exceeded this bound lost all their edges."""
    accepted: int = 0
    """Number of sampled edges before capping."""
    removed: int = 0
    """Number of sampled edges deleted by capping."""
    offsets: tuple[int, ...] = ()
    """Id of the first copy of every source vertex."""

    def copy_id(self, parent: int, index: int) -> int:
        """Id of copy `(parent, index)`."""
        return self.offsets[parent] + index


def _offsets(degrees: Sequence[int]) -> tuple[int, ...]:
    return tuple(np.concatenate(([0], np.cumsum(degrees)[:-1])).astype(int).tolist()) if len(degrees) else ()


def trevisan_reduce(
    graph: DirectedMultigraph,
    ad: ApproxDegrees,
    epsilon_prime: float,
    *,
    seed: int = 0,
    d: int | None = None,
) -> ReducedGraph:
    """Reduce `graph` to a graph of maximum degree `11 * d`.

    For every edge `u -> v` in stream order and each of `d` rounds, draw
    `i1 ~ Unif[ad[u]]` and `i2 ~ Unif[ad[v]]`, and add `(u, i1) -> (v, i2)` when
    both indices are below the true degrees. Then, in a single sweep computed
    from the sampled degrees, delete every edge incident on a copy whose degree
    exceeds `11 * d`.

    Parameters:
        graph: The source graph.
        ad: Degree estimates.
        epsilon_prime: Accuracy parameter, sets `d = ceil(80 / epsilon_prime ** 2)`.
        seed: Seed of the sampling tape (shared with the streaming engine).
        d: Explicit sampling multiplicity, overriding the formula.

    Raises:
        EmptyGraphError: When the graph has no edge.
        InvalidDegreeOracleError: When `ad` violates its contract.

    Returns:
        The reduced graph.
    """
    if graph.m == 0:
        raise EmptyGraphError
    ad.validate(graph)
    if d is None:
        if not 0 < epsilon_prime <= 1:
            raise ParameterError(f"epsilon' must be in (0, 1], got {epsilon_prime}")
        d = rounds_for(epsilon_prime)
    elif d < 1:
        raise ParameterError(f"d must be positive, got {d}")

    degrees = graph.degrees.tolist()
    offsets = _offsets(degrees)
    sampled_tails: list[np.ndarray] = []
    sampled_heads: list[np.ndarray] = []
    for position, (tail, head) in enumerate(graph.edges):
        first = round_indices(seed, Purpose.EDGE_ROUNDS, position, 0, ad[tail], d)
        second = round_indices(seed, Purpose.EDGE_ROUNDS, position, 1, ad[head], d)
        keep = (first < degrees[tail]) & (second < degrees[head])
        sampled_tails.append(offsets[tail] + first[keep])
        sampled_heads.append(offsets[head] + second[keep])

    tails = np.concatenate(sampled_tails)
    heads = np.concatenate(sampled_heads)
    vertex_count = 2 * graph.m
    cap = CAP_FACTOR * d
    sampled_degree = np.bincount(tails, minlength=vertex_count) + np.bincount(heads, minlength=vertex_count)
    over = sampled_degree > cap
    survive = ~(over[tails] | over[heads])
    logger.debug(
        f"reduction sampled {tails.size} edges, {int(over.sum())} copies over the cap of {cap}, "
        f"{int((~survive).sum())} edges removed",
    )

    copies = tuple(CopyVertex(vertex, index) for vertex, degree in enumerate(degrees) for index in range(degree))
    reduced = DirectedMultigraph(vertex_count, tuple(zip(tails[survive].tolist(), heads[survive].tolist())))
    return ReducedGraph(
        graph=reduced,
        copies=copies,
        d=d,
        degree_cap=cap,
        accepted=int(tails.size),
        removed=int((~survive).sum()),
        offsets=offsets,
    )


def lift_cut(graph: DirectedMultigraph, reduced: ReducedGraph, cut: Dicut) -> FractionalAssignment:
    """Lower a dicut of the reduced graph to a fractional assignment of `graph`.

    Every vertex gets the fraction of its copies lying in `L`; isolated vertices get 1/2.

    Parameters:
        graph: The source graph.
        reduced: Its reduction.
        cut: A dicut over copy ids.

    Returns:
        The fractional assignment.
    """
    in_left = [0] * graph.n
    for copy_id, copy in enumerate(reduced.copies):
        if copy_id in cut:
            in_left[copy.parent] += 1
    degrees = graph.degrees.tolist()
    return FractionalAssignment(
        {
            vertex: Fraction(in_left[vertex], degrees[vertex]) if degrees[vertex] else Fraction(1, 2)
            for vertex in range(graph.n)
        },
    )


def lifted_value(graph: DirectedMultigraph, reduced: ReducedGraph, cut: Dicut, *, exact: bool = False) -> Value:
    """Expected dicut of `graph` under the assignment lifted from `cut`."""
    return expected_dicut(graph, lift_cut(graph, reduced, cut), exact=exact)


_COPIES_PREFIX = "copies"


def format_reduced_graph(reduced: ReducedGraph) -> str:
    """Render a reduced graph as an edge list.

    The first comment line maps copy ids to `parent,index` pairs, in id order.
    """
    mapping = " ".join(f"{copy.parent},{copy.index}" for copy in reduced.copies)
    return format_edge_list(reduced.graph, comments=[f"{_COPIES_PREFIX} {mapping}".rstrip()])


def write_reduced_graph(reduced: ReducedGraph, path: str | Path) -> None:
    """Write a reduced graph (see [`format_reduced_graph`][dicut_stream.reduction.format_reduced_graph])."""
    Path(path).write_text(format_reduced_graph(reduced), encoding="utf-8")


def read_reduced_graph(path: str | Path) -> tuple[DirectedMultigraph, tuple[CopyVertex, ...]]:
    """Read a file written by [`write_reduced_graph`][dicut_stream.reduction.write_reduced_graph].

    Returns:
        The graph over copy ids and the copy vertex behind every id.
    """
    text = Path(path).read_text(encoding="utf-8")
    for line in text.splitlines():
        stripped = line.lstrip("# ").strip()
        if line.startswith("#") and stripped.startswith(_COPIES_PREFIX):
            pairs = stripped[len(_COPIES_PREFIX) :].split()
            copies = tuple(CopyVertex(*map(int, pair.split(","))) for pair in pairs)
            graph = parse_edge_list(text)
            if len(copies) != graph.n:
                raise EdgeListParseError(f"copy mapping covers {len(copies)} of {graph.n} vertices")
            return graph, copies
    raise EdgeListParseError("missing copy mapping comment")
