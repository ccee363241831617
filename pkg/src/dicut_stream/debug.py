"""Environment report attached to bug reports.

Estimates depend on the numeric stack, on the worker pool and on the
practical defaults, so the report lists all three.
"""

from __future__ import annotations

import os
import platform
import sys
from dataclasses import dataclass
from importlib import metadata

from dicut_stream.exceptions import ExperimentSpecError
from dicut_stream.harness import worker_count
from dicut_stream.params import ParameterSet

ENV_PREFIX = "DICUT_STREAM"
"""Prefix of the environment variables read by the package."""

STACK = ("dicut-stream", "networkx", "numpy", "scipy", "matplotlib")
"""Distributions whose versions can change results."""

REFERENCE_N = 10_000
"""Vertex count at which the practical defaults are reported."""

_DEFAULT_FIELDS = ("mode", "beta", "d", "ell", "c", "degree_cap", "vprime_cap", "eprime_cap", "coreset_size")


@dataclass(frozen=True)
class Environment:
    """What a bug report needs to reproduce an estimate."""

    python: str
    """Interpreter implementation, version and executable."""
    system: str
    """Operating system."""
    versions: dict[str, str]
    """Version of every distribution of [`STACK`][dicut_stream.debug.STACK]."""
    variables: dict[str, str]
    """Package environment variables that are set."""
    workers: str
    """Worker pool size, or why the thread variable is invalid."""
    defaults: dict[str, object]
    """Practical parameters at `epsilon = 0.1` and [`REFERENCE_N`][dicut_stream.debug.REFERENCE_N] vertices."""


def get_version(dist: str = "dicut-stream") -> str:
    """Get version of the given distribution.

    Parameters:
        dist: A distribution name.

    Returns:
        A version number, `0.0.0` when the distribution is not installed.
    """
    try:
        return metadata.version(dist)
    except metadata.PackageNotFoundError:
        return "0.0.0"


def _workers() -> str:
    try:
        return str(worker_count())
    except ExperimentSpecError as error:
        return f"invalid ({error})"


def get_debug_info() -> Environment:
    """Collect the environment report."""
    params = ParameterSet.practical(0.1, REFERENCE_N).to_dict()
    return Environment(
        python=f"{platform.python_implementation()} {platform.python_version()} ({sys.executable})",
        system=platform.platform(),
        versions={dist: get_version(dist) for dist in STACK},
        variables={name: value for name, value in sorted(os.environ.items()) if name.startswith(ENV_PREFIX)},
        workers=_workers(),
        defaults={name: params[name] for name in _DEFAULT_FIELDS},
    )


def _format(value: object) -> str:
    return f"{value:.6g}" if isinstance(value, float) else str(value)


def print_debug_info() -> None:
    """Print the environment report as a Markdown list."""
    info = get_debug_info()
    print(f"- __System__: {info.system}")
    print(f"- __Python__: {info.python}")
    print("- __Numeric stack__:")
    for dist, version in info.versions.items():
        print(f"  - `{dist}` v{version}")
    print("- __Environment variables__:")
    for name, value in info.variables.items():
        print(f"  - `{name}`: `{value}`")
    print(f"- __Worker threads__: {info.workers}")
    print(f"- __Practical defaults__ (epsilon 0.1, n {REFERENCE_N}):")
    for name, value in info.defaults.items():
        print(f"  - `{name}`: {_format(value)}")


if __name__ == "__main__":
    print_debug_info()
