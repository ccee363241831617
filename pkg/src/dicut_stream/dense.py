"""Dense branch: a uniform edge core-set kept in a reservoir, solved offline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from dicut_stream.exceptions import EmptyGraphError, ParameterError
from dicut_stream.graph import DEFAULT_EXACT_CAP, DirectedMultigraph, Edge, max_dicut_exact, max_dicut_localsearch
from dicut_stream.logger import get_logger
from dicut_stream.streams import Purpose, substream

if TYPE_CHECKING:
    from dicut_stream.streams import EdgeStream

logger = get_logger(__name__)


class EdgeReservoir:
    """Uniform sample of `capacity` edges of a stream of unknown length."""

    def __init__(self, capacity: int, seed: int = 0) -> None:
        if capacity < 1:
            raise ParameterError(f"reservoir capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.count = 0
        self.values: list[Edge] = []
        self._rng = substream(seed, Purpose.RESERVOIR)

    def add(self, tail: int, head: int) -> None:
        """Offer an edge to the reservoir."""
        self.count += 1
        if len(self.values) < self.capacity:
            self.values.append((tail, head))
        else:
            slot = int(self._rng.integers(0, self.count))
            if slot < self.capacity:
                self.values[slot] = (tail, head)

    def coreset(self) -> CoreSet:
        """The edges sampled so far."""
        return CoreSet(tuple(self.values), self.count, len(self.values))


@dataclass(frozen=True)
class CoreSet:
    """A uniform sample of the edges of a stream."""

    edges: tuple[Edge, ...]
    """Sampled edges (the whole stream when it is short)."""
    m: int
    """Number of edges in the stream."""
    k: int
    """Number of sampled edges."""


def coreset_pass1(stream: EdgeStream, k: int, seed: int = 0) -> CoreSet:
    """Keep a uniform sample of `k` edges in one pass (all of them when `m <= k`)."""
    reservoir = EdgeReservoir(k, seed)
    for _, tail, head in stream.replay():
        reservoir.add(tail, head)
    logger.debug(f"core-set of {len(reservoir.values)} edges out of {reservoir.count}")
    return reservoir.coreset()


def solve_coreset(
    coreset: CoreSet,
    *,
    exact_cap: int = DEFAULT_EXACT_CAP,
    restarts: int = 8,
    seed: int = 0,
) -> tuple[float, bool]:
    """Max-DICUT value of the core-set, and whether it came from local search.

    Raises:
        EmptyGraphError: When the core-set is empty.
    """
    if not coreset.edges:
        raise EmptyGraphError
    ids: dict[int, int] = {}
    for tail, head in coreset.edges:
        ids.setdefault(tail, len(ids))
        ids.setdefault(head, len(ids))
    graph = DirectedMultigraph(len(ids), tuple((ids[tail], ids[head]) for tail, head in coreset.edges))
    if graph.n <= exact_cap:
        value, _ = max_dicut_exact(graph, cap=exact_cap)
        return float(value), False
    logger.info(f"core-set spans {graph.n} vertices, solving it by local search")
    value, _ = max_dicut_localsearch(graph, restarts=restarts, seed=seed)
    return float(value), True


def coreset_estimate(
    coreset: CoreSet,
    *,
    exact_cap: int = DEFAULT_EXACT_CAP,
    restarts: int = 8,
    seed: int = 0,
) -> float:
    """Max-DICUT value of the core-set: exact up to `exact_cap` vertices, a local-search lower bound beyond.

    Parameters:
        coreset: The core-set.
        exact_cap: Largest vertex count solved exactly.
        restarts: Local search restarts.
        seed: Local search seed.

    Raises:
        EmptyGraphError: When the core-set is empty.

    Returns:
        The value, as a fraction of the core-set edges.
    """
    value, _ = solve_coreset(coreset, exact_cap=exact_cap, restarts=restarts, seed=seed)
    return value
