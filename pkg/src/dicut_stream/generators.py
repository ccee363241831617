"""Seeded instance generators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dicut_stream.exceptions import InvalidGraphError
from dicut_stream.graph import Dicut, DirectedMultigraph, dicut_value
from dicut_stream.logger import get_logger

logger = get_logger(__name__)

KINDS = ("uniform-random", "planted-dicut", "power-law", "bounded-degree")
"""Generator kinds accepted by [`generate`][dicut_stream.generators.generate]."""


@dataclass(frozen=True)
class GeneratedInstance:
    """A generated graph and what is known about its optimum."""

    graph: DirectedMultigraph
    """The generated graph."""
    kind: str
    """Generator kind."""
    planted_value: float | None = None
    """Value of the planted dicut, a lower bound on Max-DICUT."""
    planted_cut: Dicut | None = None
    """The planted dicut."""


def _distinct_pairs(rng: np.random.Generator, n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    tails = rng.integers(0, n, size=m)
    heads = rng.integers(0, n - 1, size=m)
    heads += heads >= tails
    return tails, heads


def _uniform(rng: np.random.Generator, n: int, m: int) -> GeneratedInstance:
    tails, heads = _distinct_pairs(rng, n, m)
    return GeneratedInstance(DirectedMultigraph(n, tuple(zip(tails.tolist(), heads.tolist()))), "uniform-random")


def _planted(rng: np.random.Generator, n: int, m: int, plant_fraction: float) -> GeneratedInstance:
    order = rng.permutation(n)
    left, right = order[: n // 2], order[n // 2 :]
    in_left = np.zeros(n, dtype=bool)
    in_left[left] = True

    crossing = math.ceil(plant_fraction * m)
    tails = [rng.choice(left, size=crossing)]
    heads = [rng.choice(right, size=crossing)]
    missing = m - crossing
    while missing > 0:
        cand_tails, cand_heads = _distinct_pairs(rng, n, missing)
        keep = ~(in_left[cand_tails] & ~in_left[cand_heads])
        tails.append(cand_tails[keep])
        heads.append(cand_heads[keep])
        missing -= int(np.count_nonzero(keep))

    shuffle = rng.permutation(m)
    all_tails = np.concatenate(tails)[shuffle]
    all_heads = np.concatenate(heads)[shuffle]
    graph = DirectedMultigraph(n, tuple(zip(all_tails.tolist(), all_heads.tolist())))
    cut = Dicut(frozenset(left.tolist()))
    planted = float(dicut_value(graph, cut)) if m else None
    return GeneratedInstance(graph, "planted-dicut", planted_value=planted, planted_cut=cut)


def _power_law(rng: np.random.Generator, n: int, m: int, exponent: float) -> GeneratedInstance:
    weights = np.arange(1, n + 1, dtype=float) ** (-1.0 / (exponent - 1.0))
    probabilities = weights / weights.sum()
    tails = rng.choice(n, size=m, p=probabilities)
    heads = rng.choice(n, size=m, p=probabilities)
    loops = np.flatnonzero(tails == heads)
    while loops.size:
        heads[loops] = rng.choice(n, size=loops.size, p=probabilities)
        loops = loops[tails[loops] == heads[loops]]
    relabel = rng.permutation(n)
    edges = zip(relabel[tails].tolist(), relabel[heads].tolist())
    return GeneratedInstance(DirectedMultigraph(n, tuple(edges)), "power-law")


def _bounded_degree(rng: np.random.Generator, n: int, m: int, max_degree: int) -> GeneratedInstance:
    if 2 * m > n * max_degree:
        raise InvalidGraphError(f"cannot place {m} edges on {n} vertices with degree at most {max_degree}")
    degree = [0] * n
    open_vertices = list(range(n))
    edges = []
    while len(edges) < m:
        if len(open_vertices) < 2:  # noqa: PLR2004
            raise InvalidGraphError("ran out of vertices below the degree bound")
        first, second = rng.choice(len(open_vertices), size=2, replace=False).tolist()
        tail, head = open_vertices[first], open_vertices[second]
        edges.append((tail, head))
        degree[tail] += 1
        degree[head] += 1
        for index in sorted((first, second), reverse=True):
            if degree[open_vertices[index]] >= max_degree:
                open_vertices.pop(index)
    return GeneratedInstance(DirectedMultigraph(n, tuple(edges)), "bounded-degree")


def generate(
    kind: str,
    n: int,
    m: int,
    *,
    seed: int = 0,
    plant_fraction: float = 0.9,
    exponent: float = 2.5,
    max_degree: int = 3,
) -> GeneratedInstance:
    """Generate a random instance.

    Kinds:

    - `uniform-random`: every edge picks an ordered pair of distinct vertices uniformly.
    - `planted-dicut`: a random half of the vertices forms `L`; `ceil(plant_fraction * m)`
      edges go from `L` to `R`, every other edge does not.
    - `power-law`: Chung-Lu style endpoints with weights `i ** (-1 / (exponent - 1))`.
    - `bounded-degree`: uniform edges among vertices whose degree is still below `max_degree`.

    Parameters:
        kind: One of [`KINDS`][dicut_stream.generators.KINDS].
        n: Number of vertices.
        m: Number of edges.
        seed: Random seed.
        plant_fraction: Fraction of planted `L -> R` edges.
        exponent: Power-law exponent, greater than 1.
        max_degree: Degree bound of `bounded-degree` graphs.

    Raises:
        InvalidGraphError: When the parameters are invalid for the kind.

    Returns:
        The instance, with its planted dicut when there is one.
    """
    if kind not in KINDS:
        raise InvalidGraphError(f"unknown generator kind {kind!r}, expected one of {', '.join(KINDS)}")
    if n < 0 or m < 0:
        raise InvalidGraphError("vertex and edge counts must be non-negative")
    if m > 0 and n < 2:  # noqa: PLR2004
        raise InvalidGraphError(f"cannot place {m} edges without self-loops on {n} vertex")
    rng = np.random.default_rng(seed)
    logger.debug(f"generating {kind} instance with n={n}, m={m}, seed={seed}")
    if kind == "uniform-random":
        return _uniform(rng, n, m)
    if kind == "planted-dicut":
        if not 0 <= plant_fraction <= 1:
            raise InvalidGraphError(f"plant fraction must be in [0, 1], got {plant_fraction}")
        return _planted(rng, n, m, plant_fraction)
    if kind == "power-law":
        if exponent <= 1:
            raise InvalidGraphError(f"power-law exponent must exceed 1, got {exponent}")
        return _power_law(rng, n, m, exponent)
    if max_degree < 1:
        raise InvalidGraphError(f"degree bound must be positive, got {max_degree}")
    return _bounded_degree(rng, n, m, max_degree)
