"""Exceptions raised by `dicut_stream`."""

from __future__ import annotations


class DicutError(Exception):
    """Base class for every error raised by the package."""


class EmptyGraphError(DicutError):
    """A dicut quantity was requested on a graph without edges."""

    def __init__(self) -> None:
        super().__init__("undefined on empty graph")


class InstanceTooLargeError(DicutError):
    """The exact oracle was called on more vertices than its cap allows."""

    def __init__(self, n: int, cap: int) -> None:
        super().__init__(f"instance too large for exact oracle ({n} vertices, cap is {cap})")
        self.n = n
        self.cap = cap


class InvalidGraphError(DicutError):
    """A graph or generator request violates the multigraph invariants."""


class EdgeListParseError(DicutError):
    """The edge-list text could not be parsed."""

    def __init__(self, message: str, lineno: int | None = None) -> None:
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(f"{where}{message}")
        self.lineno = lineno


class InvalidDegreeOracleError(DicutError):
    """Approximate degrees do not satisfy their accuracy contract."""

    def __init__(self, detail: str) -> None:
        super().__init__(f"invalid degree oracle: {detail}")


class DegreeBoundExceededError(DicutError):
    """A vertex inside an extracted ball has degree above the bound."""

    def __init__(self, vertex: int, degree: int, bound: int) -> None:
        super().__init__(f"degree bound exceeded in ball (vertex {vertex} has degree {degree} > {bound})")
        self.vertex = vertex
        self.degree = degree
        self.bound = bound


class EmptySampleError(DicutError):
    """No edge type was certified, the rescaled distribution is undefined."""

    def __init__(self) -> None:
        super().__init__("empty sample")


class MissingDegreeError(DicutError):
    """A sampled vertex has no recorded full-graph degree."""

    def __init__(self, vertex: object) -> None:
        super().__init__(f"no recorded degree for sampled vertex {vertex!r}")
        self.vertex = vertex


class ParameterError(DicutError):
    """Invalid estimator parameters or configuration."""


class StreamExhaustedError(DicutError):
    """More passes were requested than the stream supports."""

    def __init__(self, max_passes: int) -> None:
        super().__init__(f"stream supports at most {max_passes} passes")
        self.max_passes = max_passes


class ExperimentSpecError(DicutError):
    """An experiment or estimation request is invalid."""
