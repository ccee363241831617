"""Local rounding rules evaluated inside a ball, and the hash family providing their randomness.

Every vertex carries a `c`-bit label drawn from a pairwise independent hash.
The high bits of a label set the vertex priority, the low bits its coin.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import TYPE_CHECKING

import networkx as nx

from dicut_stream.exceptions import ParameterError
from dicut_stream.logger import get_logger
from dicut_stream.neighborhoods import BallGraph, TypeDistribution, TypeId, canonical_form
from dicut_stream.streams import Purpose, substream

if TYPE_CHECKING:
    from collections.abc import Iterable

    from dicut_stream.graph import Value

logger = get_logger(__name__)

RULES = ("priority-double-greedy", "oblivious-bias")
"""Available local rules."""

HALF = Fraction(1, 2)

_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(number: int) -> bool:
    """Deterministic Miller-Rabin primality test (exact below `3.3e24`)."""
    if number < 2:  # noqa: PLR2004
        return False
    for witness in _WITNESSES:
        if number % witness == 0:
            return number == witness
    odd, shift = number - 1, 0
    while odd % 2 == 0:
        odd //= 2
        shift += 1
    for witness in _WITNESSES:
        value = pow(witness, odd, number)
        if value in (1, number - 1):
            continue
        for _ in range(shift - 1):
            value = pow(value, 2, number)
            if value == number - 1:
                break
        else:
            return False
    return True


def next_prime(number: int) -> int:
    """Smallest prime greater than or equal to `number`."""
    candidate = max(number, 2)
    while not is_prime(candidate):
        candidate += 1
    return candidate


@dataclass(frozen=True)
class PairwiseHash:
    """`h(x) = ((a * x + b) mod q) mod 2 ** c`."""

    q: int
    """Prime modulus, at least `2 ** c`."""
    a: int
    """Multiplier in `[0, q)`."""
    b: int
    """Increment in `[0, q)`."""
    c: int
    """Output width in bits."""

    def __post_init__(self) -> None:
        if self.c < 1:
            raise ParameterError(f"hash width must be positive, got {self.c}")
        if not is_prime(self.q) or self.q < 1 << self.c:
            raise ParameterError(f"modulus {self.q} must be a prime of at least 2**{self.c}")
        if not (0 <= self.a < self.q and 0 <= self.b < self.q):
            raise ParameterError("hash coefficients must lie in [0, q)")

    def __call__(self, x: int) -> int:
        return ((self.a * x + self.b) % self.q) % (1 << self.c)

    def labels(self, keys: Iterable[int]) -> list[int]:
        """Hash every key."""
        return [self(key) for key in keys]


def sample_hash(n_domain: int, c: int, seed: int) -> PairwiseHash:
    """Draw a member of the pairwise independent family over `n_domain` keys.

    Parameters:
        n_domain: Number of keys the hash must separate.
        c: Output width in bits.
        seed: Random seed.

    Returns:
        A hash with `q = next_prime(max(n_domain, 2 ** c))` and uniform `a`, `b`.
    """
    if c < 1:
        raise ParameterError(f"hash width must be positive, got {c}")
    q = next_prime(max(n_domain, 1 << c))
    rng = substream(seed, Purpose.TYPE_HASH)
    a, b = (int(value) for value in rng.integers(0, q, size=2))
    return PairwiseHash(q, a, b, c)


@dataclass(frozen=True)
class LocalRule:
    """How labels are turned into per-vertex decisions."""

    kind: str = "priority-double-greedy"
    """One of [`RULES`][dicut_stream.local.RULES]."""
    priority_bits: int = 4
    """High label bits used as priority."""
    coin_bits: int = 4
    """Low label bits used as coin."""

    def __post_init__(self) -> None:
        if self.kind not in RULES:
            raise ParameterError(f"unknown local rule {self.kind!r}, expected one of {', '.join(RULES)}")
        if self.priority_bits < 1 or self.coin_bits < 0:
            raise ParameterError("a local rule needs at least one priority bit and no negative coin bits")

    @property
    def c(self) -> int:
        """Total label width."""
        return self.priority_bits + self.coin_bits

    @classmethod
    def split(cls, c: int, priority_bits: int | None = None, kind: str = "priority-double-greedy") -> LocalRule:
        """Split `c` label bits into priority and coin bits (half each by default, priority rounded up)."""
        priority = (c + 1) // 2 if priority_bits is None else priority_bits
        if not 1 <= priority <= c:
            raise ParameterError(f"priority bits must be in [1, {c}], got {priority}")
        return cls(kind, priority, c - priority)


def _double_greedy(ball: BallGraph, rule: LocalRule) -> list[Fraction]:
    network = ball.network
    priority_mask = (1 << rule.priority_bits) - 1
    coin_mask = (1 << rule.coin_bits) - 1
    keys = [((label >> rule.coin_bits) & priority_mask, vertex) for vertex, label in enumerate(ball.labels)]
    coins = [Fraction(label & coin_mask, 1 << rule.coin_bits) for label in ball.labels]

    resolvable = [False] * ball.size
    decided: list[bool | None] = [None] * ball.size  # True: Left, False: Right.
    for vertex in sorted(range(ball.size), key=keys.__getitem__):
        neighbors = nx.all_neighbors(network, vertex)
        resolvable[vertex] = ball.complete[vertex] and all(
            resolvable[other] for other in neighbors if keys[other] < keys[vertex]
        )
        if not resolvable[vertex]:
            continue
        heads = [head for _, head in network.out_edges(vertex)]
        tails = [tail for tail, _ in network.in_edges(vertex)]
        gain_left = sum(decided[head] is not True for head in heads) - sum(decided[tail] is True for tail in tails)
        gain_right = sum(decided[tail] is not False for tail in tails) - sum(decided[head] is False for head in heads)
        gain_left, gain_right = max(gain_left, 0), max(gain_right, 0)
        total = gain_left + gain_right
        decided[vertex] = total == 0 or coins[vertex] < Fraction(gain_left, total)
    return [HALF if choice is None else Fraction(int(choice)) for choice in decided]


def _oblivious_bias(ball: BallGraph) -> list[Fraction]:
    network = ball.network
    values = []
    for vertex in range(ball.size):
        out_degree, in_degree = network.out_degree(vertex), network.in_degree(vertex)
        if not ball.complete[vertex] or out_degree == in_degree:
            values.append(HALF)
        else:
            values.append(Fraction(int(out_degree > in_degree)))
    return values


def _assign(canonical: BallGraph, rule: LocalRule) -> list[Fraction]:
    if rule.kind == "oblivious-bias":
        return _oblivious_bias(canonical)
    return _double_greedy(canonical, rule)


def resolve_assignments(ball: BallGraph, rule: LocalRule) -> dict[int, Fraction]:
    """Decide every vertex of a ball: 1 for Left, 0 for Right, 1/2 when undecidable locally.

    With the priority double-greedy rule, vertices are visited by increasing
    priority (ties broken by canonical order). A vertex is resolvable when it is
    complete and all its lower-priority neighbors are resolvable. A resolvable
    vertex goes Left with probability `a' / (a' + b')` (or surely when both
    gains vanish), where `a'` and `b'` are its clipped marginal gains given the
    decisions already made, and the coin plays the random draw.

    Parameters:
        ball: The ball.
        rule: The rule.

    Returns:
        The decision of every local vertex of `ball`.
    """
    type_id, order = canonical_form(ball)
    values = _assign(type_id.to_ball(), rule)
    return {vertex: values[position] for position, vertex in enumerate(order)}


@lru_cache(maxsize=1 << 16)
def _evaluate_type(type_id: TypeId, rule: LocalRule) -> Fraction:
    values = _assign(type_id.to_ball(), rule)
    return values[0] * (1 - values[1])


def local_eval(ball: BallGraph | TypeId, rule: LocalRule) -> Fraction:
    """Probability that the root edge is cut: `rho(tail) * (1 - rho(head))`."""
    type_id = ball if isinstance(ball, TypeId) else canonical_form(ball)[0]
    return _evaluate_type(type_id, rule)


def estimate(distribution: TypeDistribution, rule: LocalRule) -> Value:
    """Expected local value of a type drawn from `distribution`."""
    total: Value = sum((mass * _evaluate_type(type_id, rule) for type_id, mass in distribution.items()), Fraction(0))
    logger.debug(f"estimated {float(total):.6f} over {len(distribution)} types")
    return total
