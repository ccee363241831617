"""Replayable edge streams and position-keyed random substreams.

Every random draw made by the estimators comes from a generator keyed by
`(seed, purpose, stream position)`. Two runs sharing a seed therefore draw the
same values for the same edge, whatever else they did before. The offline
reduction and the streaming passes rely on this to share their tapes.
"""

from __future__ import annotations

from enum import IntEnum
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from dicut_stream.exceptions import StreamExhaustedError
from dicut_stream.graph import iter_edge_list
from dicut_stream.logger import get_logger

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable, Iterator

    from dicut_stream.graph import DirectedMultigraph, Edge

logger = get_logger(__name__)

_SEED_MASK = (1 << 63) - 1


class Purpose(IntEnum):
    """What a random substream is used for."""

    VERTEX_SAMPLE = 1
    """Bernoulli draws selecting sampled copies in the first pass."""
    DEGREE_SAMPLE = 2
    """Bernoulli draws feeding the estimated degrees."""
    EDGE_ROUNDS = 3
    """Copy indices drawn with exact (or stored) degrees."""
    ESTIMATE_ROUNDS = 4
    """Copy indices drawn with estimated degrees."""
    TYPE_HASH = 5
    """The hash labeling sampled copies."""
    RESERVOIR = 6
    """Replacement decisions of the edge reservoir."""
    PERTURB = 7
    """Perturbation of approximate degrees."""


def substream(seed: int, purpose: Purpose, position: int = 0) -> np.random.Generator:
    """Return the generator dedicated to one purpose at one stream position.

    Parameters:
        seed: The run seed.
        purpose: What the draws are for.
        position: Stream position (edge index), or any other sub-key.

    Returns:
        A fresh generator.
    """
    return np.random.default_rng([seed & _SEED_MASK, int(purpose), position])


def round_indices(seed: int, purpose: Purpose, position: int, side: int, bound: int, rounds: int) -> np.ndarray:
    """Draw the copy indices of one endpoint of one edge for all sampling rounds.

    Tails use `side=0` and heads `side=1`, so that the draws of one endpoint do
    not depend on whether the other endpoint was drawn at all.

    Parameters:
        seed: The run seed.
        purpose: [`EDGE_ROUNDS`][dicut_stream.streams.Purpose.EDGE_ROUNDS] or
            [`ESTIMATE_ROUNDS`][dicut_stream.streams.Purpose.ESTIMATE_ROUNDS].
        position: Stream position of the edge.
        side: 0 for the tail, 1 for the head.
        bound: Indices are drawn uniformly from `[0, bound)`.
        rounds: Number of rounds.

    Returns:
        An integer array of length `rounds`.
    """
    return substream(seed, purpose, 2 * position + side).integers(0, bound, size=rounds)


class EdgeStream:
    """A replayable stream of directed edges with a pass counter."""

    def __init__(
        self,
        n: int,
        source: Callable[[], Iterable[Edge]],
        *,
        max_passes: int | None = None,
    ) -> None:
        """Initialize the stream.

        Parameters:
            n: Number of vertices.
            source: Called once per pass; must yield the same edges in the same order every time.
            max_passes: Number of passes the stream supports, unlimited when `None`.
        """
        self.n = n
        self.max_passes = max_passes
        self._source = source
        self._passes = 0

    @classmethod
    def from_graph(cls, graph: DirectedMultigraph, *, max_passes: int | None = None) -> EdgeStream:
        """Stream the edges of an in-memory graph."""
        return cls(graph.n, lambda: graph.edges, max_passes=max_passes)

    @classmethod
    def from_path(cls, path: str | Path, *, max_passes: int | None = None) -> EdgeStream:
        """Stream an edge-list file, re-reading it on every pass.

        Vertex ids in the file must be integers in `[0, n)`.
        """
        path = Path(path)
        with path.open(encoding="utf-8") as file:
            n, _, _ = iter_edge_list(file)

        def read() -> Iterator[Edge]:
            with path.open(encoding="utf-8") as file:
                _, _, edges = iter_edge_list(file)
                yield from edges

        return cls(n, read, max_passes=max_passes)

    @property
    def passes(self) -> int:
        """Number of passes started so far."""
        return self._passes

    def replay(self) -> Iterator[tuple[int, int, int]]:
        """Start a new pass.

        The pass is counted when this method is called, whether or not the
        returned iterator is consumed.

        Raises:
            StreamExhaustedError: When every supported pass was already used.

        Returns:
            An iterator over the stream position, tail and head of every edge.
        """
        if self.max_passes is not None and self._passes >= self.max_passes:
            raise StreamExhaustedError(self.max_passes)
        self._passes += 1
        logger.debug(f"starting pass {self._passes}")
        return ((position, tail, head) for position, (tail, head) in enumerate(self._source()))
