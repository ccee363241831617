"""Estimator parameters, with faithful or practical thresholds."""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import TYPE_CHECKING, Any

from dicut_stream.exceptions import ParameterError
from dicut_stream.local import RULES, LocalRule
from dicut_stream.logger import get_logger

# YORE: EOL 3.10: Replace block with line 2.
if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

if TYPE_CHECKING:
    from collections.abc import Mapping

logger = get_logger(__name__)

MODES = ("faithful", "practical")
"""Parameter modes."""

_MODE_ALIASES = {"faithful": "faithful", "paper-faithful": "faithful", "practical": "practical"}


@dataclass(frozen=True)
class Diagnostics:
    """Read-only constants of the type-distribution estimation guarantee."""

    beta0: float
    """Smallest exponent `beta0` with `p >= n ** -beta0` covered by the guarantee."""
    n0: float
    """Number of vertices from which the guarantee applies."""
    epsilon2: float
    """Accuracy of the type distribution, `epsilon / 8`."""


@dataclass(frozen=True)
class ParameterSet:
    """Every threshold used by the streaming estimators.

    Build instances with [`faithful`][dicut_stream.params.ParameterSet.faithful],
    [`practical`][dicut_stream.params.ParameterSet.practical] or
    [`from_mapping`][dicut_stream.params.ParameterSet.from_mapping].
    """

    epsilon: float
    """Target accuracy, in `(0, 1/2)`."""
    n: int
    """Number of vertices of the input."""
    mode: str
    """`faithful` or `practical`."""
    beta: float
    """Vertex sampling exponent: copies are kept with probability `n ** -beta`."""
    delta: float
    """Exponent of the sampled-edge cap."""
    d: int
    """Sampling rounds per edge."""
    small_m_threshold: float
    """Streams with at most this many edges are solved exactly."""
    vprime_cap: float
    """Cap on the number of sampled copies."""
    eprime_cap: float
    """Cap on the number of sampled edges."""
    estdeg_increment: float
    """Increment of an estimated degree, `n ** (beta / 4)`."""
    storedeg_threshold: float
    """Vertices with fewer stored edges than this are low-degree, `n ** (2 beta / 3)`."""
    estdeg_nonzero_cap: float
    """Cap on the number of non-zero estimated degrees, `n ** (1 - beta / 8)`."""
    degree_cap: int
    """Copies with a larger sampled degree lose their edges, `11 d`."""
    dense_dispatch_threshold: float
    """Streams with more edges go to the dense branch."""
    ell: int
    """Neighborhood radius."""
    c: int
    """Label width in bits."""
    degree_bound: int
    """Degree bound `D` of the types."""
    priority_bits: int
    """Label bits used as priority by the local rule."""
    rule: str = "priority-double-greedy"
    """Local rule kind."""
    coreset_size: int = 1
    """Reservoir size of the dense branch."""
    exact_cap: int = 26
    """Largest vertex count solved by exhaustive search."""
    caps_enabled: bool = True
    """Whether cap violations terminate a run."""
    localsearch_restarts: int = 8
    """Restarts of the local search fallback."""

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ParameterError(f"unknown mode {self.mode!r}, expected one of {', '.join(MODES)}")
        if not 0 < self.epsilon < 0.5:  # noqa: PLR2004
            raise ParameterError(f"epsilon must be in (0, 1/2), got {self.epsilon}")
        if self.n < 0:
            raise ParameterError(f"vertex count must be non-negative, got {self.n}")
        if not 0 <= self.beta < 1:
            raise ParameterError(f"beta must be in [0, 1), got {self.beta}")
        if self.d < 1:
            raise ParameterError(f"d must be at least 1, got {self.d}")
        for name in ("vprime_cap", "eprime_cap", "estdeg_nonzero_cap", "degree_cap"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.ell < 1 or self.c < 1 or self.degree_bound < 1:
            raise ParameterError("ell, c and degree_bound must be positive")
        if not 1 <= self.priority_bits <= self.c:
            raise ParameterError(f"priority_bits must be in [1, {self.c}], got {self.priority_bits}")
        if self.rule not in RULES:
            raise ParameterError(f"unknown local rule {self.rule!r}")
        if self.coreset_size < 1 or self.exact_cap < 1 or self.localsearch_restarts < 1:
            raise ParameterError("coreset_size, exact_cap and localsearch_restarts must be positive")

    @property
    def sampling_probability(self) -> float:
        """Probability `n ** -beta` of keeping a copy."""
        return float(self.n) ** -self.beta if self.n else 1.0

    @property
    def local_rule(self) -> LocalRule:
        """The local rule described by these parameters."""
        return LocalRule(self.rule, self.priority_bits, self.c - self.priority_bits)

    @staticmethod
    def _derived(epsilon: float, n: int, beta: float, d: int) -> dict[str, Any]:
        size = max(n, 1)
        return {
            "estdeg_increment": size ** (beta / 4),
            "storedeg_threshold": size ** (2 * beta / 3),
            "estdeg_nonzero_cap": size ** (1 - beta / 8),
            "vprime_cap": size ** (1 - 3 * beta / 4),
            "degree_cap": 11 * d,
            "small_m_threshold": size ** (1 - epsilon ** (1 / epsilon)),
            "dense_dispatch_threshold": size ** (1 + epsilon ** (4 / epsilon)),
            "coreset_size": max(1, math.ceil(20 * size * math.log(size))) if size > 1 else 1,
        }

    @classmethod
    def faithful(cls, epsilon: float, n: int) -> ParameterSet:
        """Derive every parameter from `epsilon` and `n` with the formulas of the analysis.

        These values are astronomically conservative; they are meant for
        formula-level checks, not for running estimators at desk scale.
        """
        if not 0 < epsilon < 0.5:  # noqa: PLR2004
            raise ParameterError(f"epsilon must be in (0, 1/2), got {epsilon}")
        beta = epsilon ** (20 / epsilon)
        delta = epsilon ** (25 / epsilon)
        d = math.ceil(320 / epsilon**2)
        c = math.ceil(2 * math.log2(8 / epsilon))
        derived = cls._derived(epsilon, n, beta, d)
        return cls(
            epsilon=epsilon,
            n=n,
            mode="faithful",
            beta=beta,
            delta=delta,
            d=d,
            eprime_cap=max(n, 1) ** (1 - delta),
            ell=math.ceil(8 / epsilon),
            c=c,
            degree_bound=11 * d,
            priority_bits=(c + 1) // 2,
            **derived,
        )

    @classmethod
    def practical(cls, epsilon: float, n: int, **overrides: Any) -> ParameterSet:
        """Desk-scale defaults (`beta = 0.15`, `d = 32`, `ell = 2`, `c = 8`) with direct overrides.

        Thresholds that are not overridden follow the formulas of the analysis
        evaluated at the chosen `beta` and `d`; the sampled-edge cap defaults to
        `11 d` edges per sampled copy.

        Parameters:
            epsilon: Target accuracy.
            n: Number of vertices.
            **overrides: Values for any other field.

        Raises:
            ParameterError: On unknown fields or invalid values.

        Returns:
            The parameters.
        """
        known = {field.name for field in fields(cls)} - {"epsilon", "n", "mode"}
        unknown = set(overrides) - known
        if unknown:
            raise ParameterError(f"unknown parameters: {', '.join(sorted(unknown))}")
        if not 0 < epsilon < 0.5:  # noqa: PLR2004
            raise ParameterError(f"epsilon must be in (0, 1/2), got {epsilon}")
        beta = float(overrides.get("beta", 0.15))
        d = int(overrides.get("d", 32))
        c = int(overrides.get("c", 8))
        values: dict[str, Any] = {
            "beta": beta,
            "delta": epsilon ** (25 / epsilon),
            "d": d,
            "ell": 2,
            "c": c,
            "priority_bits": (c + 1) // 2,
            **cls._derived(epsilon, n, beta, d),
        }
        values.update(overrides)
        # Caps derived from other fields follow their overridden values.
        values.setdefault("degree_bound", values["degree_cap"])
        values.setdefault("eprime_cap", values["vprime_cap"] * values["degree_cap"])
        return cls(epsilon=epsilon, n=n, mode="practical", **values)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], n: int) -> ParameterSet:
        """Build parameters from a configuration mapping.

        The mapping holds `epsilon`, an optional `mode`, and in practical mode any
        field override. Keys may be nested under a `parameters` table.

        Raises:
            ParameterError: When overrides are given in faithful mode, or values are invalid.
        """
        values = dict(mapping.get("parameters", mapping))
        mode = _MODE_ALIASES.get(str(values.pop("mode", "practical")))
        if mode is None:
            raise ParameterError(f"unknown mode, expected one of {', '.join(MODES)}")
        epsilon = float(values.pop("epsilon", 0.1))
        values.pop("n", None)
        if mode == "faithful":
            if values:
                overrides = ", ".join(sorted(values))
                raise ParameterError(f"faithful mode derives every parameter, got overrides: {overrides}")
            return cls.faithful(epsilon, n)
        return cls.practical(epsilon, n, **values)

    def with_overrides(self, **overrides: Any) -> ParameterSet:
        """Return a copy with some fields replaced (practical mode only)."""
        if self.mode == "faithful" and overrides:
            raise ParameterError("faithful mode derives every parameter")
        return replace(self, **overrides)

    def to_dict(self) -> dict[str, Any]:
        """Field values, as a plain dictionary."""
        return asdict(self)

    def diagnostics(self, type_count: int, alpha: float) -> Diagnostics:
        """Constants of the type-distribution guarantee at these parameters.

        Parameters:
            type_count: Number `r` of possible types.
            alpha: Upper bound on the fraction of isolated vertices, in `[0, 1)`.

        Returns:
            `beta0 = 1 / (4 D ** ell)` and `n0 = (20 r**3 D**(2 ell + 1) / (epsilon2**2 (1 - alpha)))**2`.
        """
        if not 0 <= alpha < 1:
            raise ParameterError(f"alpha must be in [0, 1), got {alpha}")
        bound = self.degree_bound
        epsilon2 = self.epsilon / 8
        beta0 = 1 / (4 * float(bound) ** self.ell)
        n0 = (20 * float(type_count) ** 3 * float(bound) ** (2 * self.ell + 1) / (epsilon2**2 * (1 - alpha))) ** 2
        return Diagnostics(beta0=beta0, n0=n0, epsilon2=epsilon2)


def load_config(path: str | Path) -> dict[str, Any]:
    """Read a TOML configuration file.

    Raises:
        ParameterError: When the file is not valid TOML.
    """
    try:
        with Path(path).open("rb") as file:
            return tomllib.load(file)
    except tomllib.TOMLDecodeError as error:
        raise ParameterError(f"invalid configuration file {path}: {error}") from error


def hoeffding_bound(k: int, t: float) -> float:
    """Two-sided Hoeffding bound `2 exp(-2 t**2 / k)` on `|S - E[S]| >= t` for `k` independent `[0, 1]` variables."""
    if k <= 0:
        return 1.0
    return min(1.0, 2 * math.exp(-2 * t**2 / k))


def chebyshev_bound(variance: float, a: float) -> float:
    """Chebyshev bound `variance / a**2` on `|X - E[X]| >= a`."""
    if a <= 0:
        return 1.0
    return min(1.0, variance / a**2)
