"""Experiment harness: trial runner, result tables and parameter sweeps."""

from __future__ import annotations

import csv
import itertools
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

from dicut_stream.dense import coreset_pass1, solve_coreset
from dicut_stream.engine import PEAK_KEYS, REPORT_HEADER, EstimateReport, run_estimator
from dicut_stream.exceptions import DicutError, ExperimentSpecError
from dicut_stream.generators import KINDS, GeneratedInstance, generate
from dicut_stream.graph import max_dicut_exact, max_dicut_localsearch, read_edge_list
from dicut_stream.logger import get_logger
from dicut_stream.params import ParameterSet, load_config
from dicut_stream.streams import EdgeStream

if TYPE_CHECKING:
    from collections.abc import Iterator, Mapping, Sequence
    from typing import TextIO

    from dicut_stream.graph import DirectedMultigraph

logger = get_logger(__name__)

ESTIMATORS = ("two-pass", "three-pass", "meta", "exact", "coreset")
"""Estimators a trial can run."""

THREADS_VARIABLE = "DICUT_STREAM_THREADS"
"""Environment variable capping the worker pool."""

FAILED_BRANCH = "error"
"""Branch of a trial that raised before producing an estimate."""

EXPERIMENT_HEADER = (
    "instance",
    "n",
    "m",
    "epsilon",
    "estimator",
    "trials",
    "mean",
    "min",
    "max",
    "opt",
    "opt_source",
    "ratio",
    "terminated_rate",
    "peak_vprime",
    "peak_eprime",
    "peak_ehat",
    "status",
)
"""Columns of the experiment table."""


def worker_count(trials: int | None = None) -> int:
    """Size of the worker pool: `DICUT_STREAM_THREADS`, else the CPU count, never more than `trials`."""
    value = os.environ.get(THREADS_VARIABLE)
    if value:
        try:
            threads = int(value)
        except ValueError:
            raise ExperimentSpecError(f"{THREADS_VARIABLE} must be an integer, got {value!r}") from None
        if threads < 1:
            raise ExperimentSpecError(f"{THREADS_VARIABLE} must be positive, got {threads}")
    else:
        threads = os.cpu_count() or 1
    return max(1, min(threads, trials)) if trials else threads


@dataclass(frozen=True)
class GeneratorSpec:
    """Arguments of [`generate`][dicut_stream.generators.generate]."""

    kind: str
    """Generator kind."""
    n: int
    """Number of vertices."""
    m: int
    """Number of edges."""
    seed: int = 0
    """Generator seed."""
    plant_fraction: float = 0.9
    """Fraction of planted edges."""
    exponent: float = 2.5
    """Power-law exponent."""
    max_degree: int = 3
    """Degree bound of bounded-degree graphs."""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ExperimentSpecError(f"unknown generator kind {self.kind!r}, expected one of {', '.join(KINDS)}")

    def build(self) -> GeneratedInstance:
        """Generate the instance."""
        return generate(
            self.kind,
            self.n,
            self.m,
            seed=self.seed,
            plant_fraction=self.plant_fraction,
            exponent=self.exponent,
            max_degree=self.max_degree,
        )

    @property
    def label(self) -> str:
        """Short description used in tables."""
        return f"{self.kind}(seed={self.seed})"


@dataclass(frozen=True)
class ExperimentSpec:
    """One estimator run over one instance, repeated for several seeds."""

    source: Path | GeneratorSpec
    """Edge-list file or generator arguments."""
    estimator: str = "meta"
    """One of [`ESTIMATORS`][dicut_stream.harness.ESTIMATORS]."""
    overrides: Mapping[str, Any] = field(default_factory=dict)
    """Parameter overrides."""
    epsilon: float = 0.1
    """Target accuracy."""
    mode: str = "practical"
    """Parameter mode."""
    trials: int = 1
    """Number of trials; trial `i` uses seed `base_seed + i`."""
    base_seed: int = 0
    """Seed of the first trial."""
    out: Path | None = None
    """Output path, standard output when `None`."""

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ExperimentSpecError(f"trials must be at least 1, got {self.trials}")
        if self.estimator not in ESTIMATORS:
            raise ExperimentSpecError(
                f"unknown estimator {self.estimator!r}, expected one of {', '.join(ESTIMATORS)}",
            )

    def instance(self) -> GeneratedInstance:
        """Load or generate the instance."""
        if isinstance(self.source, GeneratorSpec):
            return self.source.build()
        return GeneratedInstance(read_edge_list(self.source), "file")

    def parameters(self, n: int) -> ParameterSet:
        """Parameters for an instance with `n` vertices."""
        return ParameterSet.from_mapping({"epsilon": self.epsilon, "mode": self.mode, **self.overrides}, n)


def _failed_report(seed: int, reason: str, graph: DirectedMultigraph) -> EstimateReport:
    return EstimateReport(
        seed=seed,
        branch=FAILED_BRANCH,
        value=None,
        terminated=reason,
        peaks=dict.fromkeys(PEAK_KEYS, 0),
        m=graph.m,
        n=graph.n,
    )


def exact_report(graph: DirectedMultigraph, params: ParameterSet, seed: int) -> EstimateReport:
    """Solve the whole graph offline: exactly up to `exact_cap` active vertices, by local search beyond."""
    dense, _ = graph.relabel_dense()
    localsearch = dense.n > params.exact_cap
    if localsearch:
        value, _ = max_dicut_localsearch(dense, restarts=params.localsearch_restarts, seed=seed)
    else:
        value, _ = max_dicut_exact(dense, cap=params.exact_cap)
    peaks = dict.fromkeys(PEAK_KEYS, 0)
    return EstimateReport(
        seed=seed,
        branch="exact-small",
        value=float(value),
        terminated=None,
        peaks=peaks,
        m=graph.m,
        n=graph.n,
        caps_enabled=params.caps_enabled,
        localsearch=localsearch,
    )


def run_trial(
    graph: DirectedMultigraph,
    estimator: str,
    params: ParameterSet,
    seed: int,
    *,
    path: Path | None = None,
) -> EstimateReport:
    """Run one estimator once.

    Errors raised by the estimator are reported as a failed trial.

    Parameters:
        graph: The instance.
        estimator: One of [`ESTIMATORS`][dicut_stream.harness.ESTIMATORS].
        params: Parameters.
        seed: Trial seed.
        path: Edge-list file to stream from, instead of the in-memory graph.

    Returns:
        The report of the trial. Trials that raise a [`DicutError`][dicut_stream.exceptions.DicutError]
        are reported terminated, with branch [`FAILED_BRANCH`][dicut_stream.harness.FAILED_BRANCH].
    """
    stream = EdgeStream.from_path(path) if path is not None else EdgeStream.from_graph(graph)
    try:
        if estimator == "exact":
            return exact_report(graph, params, seed)
        if estimator == "coreset":
            coreset = coreset_pass1(stream, params.coreset_size, seed)
            value, localsearch = solve_coreset(
                coreset,
                exact_cap=params.exact_cap,
                restarts=params.localsearch_restarts,
                seed=seed,
            )
            peaks = dict.fromkeys(PEAK_KEYS, 0)
            peaks["coreset"] = coreset.k
            return EstimateReport(
                seed=seed,
                branch="dense",
                value=value,
                terminated=None,
                peaks=peaks,
                m=coreset.m,
                n=graph.n,
                caps={"coreset": params.coreset_size},
                localsearch=localsearch,
            )
        return run_estimator(estimator, stream, params, seed)
    except DicutError as error:
        logger.warning(f"trial with seed {seed} failed: {error}")
        return _failed_report(seed, str(error), graph)


def run_trials(
    spec: ExperimentSpec,
    *,
    instance: GeneratedInstance | None = None,
    threads: int | None = None,
) -> list[EstimateReport]:
    """Run every trial of `spec` on a worker pool.

    Parameters:
        spec: The experiment.
        instance: The instance, loaded from `spec` when not given.
        threads: Pool size, from [`worker_count`][dicut_stream.harness.worker_count] by default.

    Returns:
        The reports, in trial order.
    """
    instance = instance or spec.instance()
    graph = instance.graph
    params = spec.parameters(graph.n)
    path = spec.source if isinstance(spec.source, Path) and graph.vertex_labels is None else None
    seeds = [spec.base_seed + trial for trial in range(spec.trials)]
    workers = threads if threads is not None else worker_count(spec.trials)
    logger.debug(f"running {spec.trials} {spec.estimator} trials on {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(lambda seed: run_trial(graph, spec.estimator, params, seed, path=path), seeds))


def write_reports(reports: Sequence[EstimateReport], file: TextIO) -> None:
    """Write one CSV row per report, after a header."""
    writer = csv.writer(file, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    writer.writerows(report.to_row() for report in reports)


@dataclass(frozen=True)
class ExperimentCell:
    """One point of an experiment grid."""

    source: Path | GeneratorSpec
    """The instance."""
    epsilon: float
    """Target accuracy."""
    estimator: str
    """Estimator."""

    @property
    def label(self) -> str:
        """Short description of the instance."""
        return self.source.label if isinstance(self.source, GeneratorSpec) else self.source.name


def _as_list(value: Any) -> list[Any]:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _instances(entry: Mapping[str, Any], base_dir: Path) -> Iterator[Path | GeneratorSpec]:
    if "path" in entry:
        yield (base_dir / entry["path"]).resolve()
        return
    try:
        kind = entry["kind"]
        sizes = _as_list(entry["n"])
    except KeyError as error:
        raise ExperimentSpecError(f"instance entry misses {error.args[0]!r}") from None
    if "m" not in entry and "density" not in entry:
        raise ExperimentSpecError("instance entry needs 'm' or 'density'")
    extra = {key: entry[key] for key in ("plant_fraction", "exponent", "max_degree") if key in entry}
    for n, seed in itertools.product(sizes, _as_list(entry.get("seed", 0))):
        if "m" in entry:
            counts = [int(m) for m in _as_list(entry["m"])]
        else:
            counts = [round(float(density) * int(n)) for density in _as_list(entry["density"])]
        for m in counts:
            yield GeneratorSpec(kind, int(n), m, seed=int(seed), **extra)


@dataclass(frozen=True)
class ExperimentGrid:
    """A sweep over instances, accuracies and estimators.

    Read from a TOML file with an `[experiment]` table (`estimators`, `epsilons`,
    `trials`, `base_seed`, `mode`, `out`), `[[experiment.instances]]` entries
    (either `path`, or `kind`, `n` and `m` or `density`, where lists are
    expanded), and an optional `[parameters]` table of overrides.
    """

    instances: tuple[Path | GeneratorSpec, ...]
    """Instances of the sweep."""
    epsilons: tuple[float, ...] = (0.1,)
    """Accuracies of the sweep."""
    estimators: tuple[str, ...] = ("meta",)
    """Estimators of the sweep."""
    trials: int = 1
    """Trials per cell."""
    base_seed: int = 0
    """Seed of the first trial of every cell."""
    mode: str = "practical"
    """Parameter mode."""
    overrides: Mapping[str, Any] = field(default_factory=dict)
    """Parameter overrides shared by every cell."""
    out: Path | None = None
    """Output path of the table."""

    def __post_init__(self) -> None:
        if not self.instances:
            raise ExperimentSpecError("an experiment needs at least one instance")
        if self.trials < 1:
            raise ExperimentSpecError(f"trials must be at least 1, got {self.trials}")
        unknown = [name for name in self.estimators if name not in ESTIMATORS]
        if unknown:
            raise ExperimentSpecError(f"unknown estimators: {', '.join(unknown)}")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], base_dir: str | Path = ".") -> ExperimentGrid:
        """Build a grid from a parsed configuration."""
        table = mapping.get("experiment")
        if not isinstance(table, dict):
            raise ExperimentSpecError("missing [experiment] table")
        base = Path(base_dir)
        instances = tuple(source for entry in table.get("instances", []) for source in _instances(entry, base))
        out = table.get("out")
        return cls(
            instances=instances,
            epsilons=tuple(float(epsilon) for epsilon in _as_list(table.get("epsilons", 0.1))),
            estimators=tuple(_as_list(table.get("estimators", "meta"))),
            trials=int(table.get("trials", 1)),
            base_seed=int(table.get("base_seed", 0)),
            mode=str(table.get("mode", "practical")),
            overrides=dict(mapping.get("parameters", {})),
            out=base / out if out else None,
        )

    @classmethod
    def from_path(cls, path: str | Path) -> ExperimentGrid:
        """Read a grid from a TOML file; relative paths are resolved from its directory."""
        path = Path(path)
        try:
            config = load_config(path)
        except DicutError as error:
            raise ExperimentSpecError(str(error)) from error
        return cls.from_mapping(config, path.parent)

    def cells(self) -> Iterator[ExperimentCell]:
        """Every cell, instances varying slowest."""
        for source, epsilon, estimator in itertools.product(self.instances, self.epsilons, self.estimators):
            yield ExperimentCell(source, epsilon, estimator)


@dataclass(frozen=True)
class CellResult:
    """Aggregated outcome of one cell."""

    cell: ExperimentCell
    """The cell."""
    n: int = 0
    """Vertex count of the instance."""
    m: int = 0
    """Edge count of the instance."""
    reports: tuple[EstimateReport, ...] = ()
    """Reports of every trial."""
    opt: float | None = None
    """Reference optimum."""
    opt_source: str = "none"
    """`oracle`, `planted` or `localsearch`."""
    error: str | None = None
    """Why the cell failed, if it did."""

    @property
    def values(self) -> list[float]:
        """Values of the trials that did not terminate early."""
        return [report.value for report in self.reports if report.value is not None]

    @property
    def mean(self) -> float | None:
        """Mean value over successful trials."""
        return statistics.fmean(self.values) if self.values else None

    @property
    def ratio(self) -> float | None:
        """Mean value over the reference optimum."""
        if self.mean is None or not self.opt:
            return None
        return self.mean / self.opt

    @property
    def terminated_rate(self) -> float:
        """Fraction of trials that terminated early."""
        if not self.reports:
            return 1.0
        return sum(report.terminated_early for report in self.reports) / len(self.reports)

    def peak(self, name: str) -> int:
        """Largest peak of a structure over the trials."""
        return max((report.peaks.get(name, 0) for report in self.reports), default=0)

    def row(self) -> list[str]:
        """CSV fields, in [`EXPERIMENT_HEADER`][dicut_stream.harness.EXPERIMENT_HEADER] order."""
        values = self.values

        def number(value: float | None) -> str:
            return "" if value is None else f"{value:.10g}"

        if self.error is not None:
            status = f"failed: {self.error}"
        elif not values:
            status = "failed: every trial terminated early"
        else:
            status = "ok"
        return [
            self.cell.label,
            str(self.n),
            str(self.m),
            f"{self.cell.epsilon:g}",
            self.cell.estimator,
            str(len(self.reports)),
            number(self.mean),
            number(min(values, default=None)),
            number(max(values, default=None)),
            number(self.opt),
            self.opt_source,
            number(self.ratio),
            f"{self.terminated_rate:.4g}",
            str(self.peak("vprime")),
            str(self.peak("eprime")),
            str(self.peak("ehat")),
            status,
        ]


def reference_value(instance: GeneratedInstance, params: ParameterSet) -> tuple[float | None, str]:
    """Best known Max-DICUT value of an instance and where it comes from."""
    graph, _ = instance.graph.relabel_dense()
    if graph.m == 0:
        return None, "none"
    if graph.n <= params.exact_cap:
        value, _ = max_dicut_exact(graph, cap=params.exact_cap)
        return float(value), "oracle"
    if instance.planted_value is not None:
        return instance.planted_value, "planted"
    value, _ = max_dicut_localsearch(graph, restarts=params.localsearch_restarts)
    return float(value), "localsearch"


def run_cell(grid: ExperimentGrid, cell: ExperimentCell, *, threads: int | None = None) -> CellResult:
    """Run the trials of one cell; errors mark the cell failed instead of propagating."""
    try:
        spec = ExperimentSpec(
            source=cell.source,
            estimator=cell.estimator,
            overrides=grid.overrides,
            epsilon=cell.epsilon,
            mode=grid.mode,
            trials=grid.trials,
            base_seed=grid.base_seed,
        )
        instance = spec.instance()
        opt, opt_source = reference_value(instance, spec.parameters(instance.graph.n))
        reports = run_trials(spec, instance=instance, threads=threads)
    except DicutError as error:
        logger.warning(f"cell {cell.label} / {cell.estimator} / epsilon={cell.epsilon:g} failed: {error}")
        return CellResult(cell, error=str(error))
    return CellResult(
        cell,
        n=instance.graph.n,
        m=instance.graph.m,
        reports=tuple(reports),
        opt=opt,
        opt_source=opt_source,
    )


def run_experiment(grid: ExperimentGrid, *, threads: int | None = None) -> list[CellResult]:
    """Run every cell of a grid, in grid order."""
    results = []
    for cell in grid.cells():
        result = run_cell(grid, cell, threads=threads)
        logger.info(f"{cell.label} / {cell.estimator} / epsilon={cell.epsilon:g}: ratio {result.ratio}")
        results.append(result)
    return results


def write_table(results: Sequence[CellResult], file: TextIO) -> None:
    """Write the experiment table as CSV."""
    writer = csv.writer(file, lineterminator="\n")
    writer.writerow(EXPERIMENT_HEADER)
    writer.writerows(result.row() for result in results)


def summarize(results: Sequence[CellResult]) -> dict[str, dict[str, float]]:
    """Summary statistics per estimator: cells, failed cells, mean ratio and early-termination rate."""
    summary: dict[str, dict[str, float]] = {}
    for estimator in dict.fromkeys(result.cell.estimator for result in results):
        cells = [result for result in results if result.cell.estimator == estimator]
        ratios = [result.ratio for result in cells if result.ratio is not None]
        summary[estimator] = {
            "cells": len(cells),
            "failed": sum(result.error is not None or not result.values for result in cells),
            "mean_ratio": statistics.fmean(ratios) if ratios else float("nan"),
            "terminated_rate": statistics.fmean(result.terminated_rate for result in cells),
        }
    return summary
