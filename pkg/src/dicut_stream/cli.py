"""Module that contains the command line application."""

from __future__ import annotations

import argparse
import logging
import sys
from contextlib import nullcontext
from pathlib import Path
from typing import TYPE_CHECKING, Any

from dicut_stream import debug
from dicut_stream.exceptions import DicutError
from dicut_stream.generators import KINDS, generate
from dicut_stream.graph import format_edge_list
from dicut_stream.harness import (
    ESTIMATORS,
    ExperimentGrid,
    ExperimentSpec,
    run_experiment,
    run_trials,
    summarize,
    write_reports,
    write_table,
)
from dicut_stream.logger import ROOT_NAME
from dicut_stream.params import MODES, load_config
from dicut_stream.plotting import plot_ratios
from dicut_stream.validation import SUITES, run_suite

if TYPE_CHECKING:
    from typing import TextIO

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class _DebugInfo(argparse.Action):
    def __init__(self, nargs: int | str | None = 0, **kwargs: Any) -> None:
        super().__init__(nargs=nargs, **kwargs)

    def __call__(self, *args: Any, **kwargs: Any) -> None:  # noqa: ARG002
        debug.print_debug_info()
        sys.exit(0)


def get_parser() -> argparse.ArgumentParser:
    """Return the CLI argument parser.

    Returns:
        An argparse parser.
    """
    parser = argparse.ArgumentParser(prog="dicut-stream", description="Streaming Max-DICUT estimation toolkit.")
    parser.add_argument("-V", "--version", action="version", version=f"%(prog)s {debug.get_version()}")
    parser.add_argument("--debug-info", action=_DebugInfo, help="Print debug information.")
    parser.add_argument("--log-level", choices=LOG_LEVELS, default="WARNING", help="Logging level.")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")

    generate_parser = subparsers.add_parser("generate", help="Generate an instance as an edge list.")
    generate_parser.add_argument("--kind", choices=KINDS, default="uniform-random", help="Generator kind.")
    generate_parser.add_argument("--n", type=int, required=True, help="Number of vertices.")
    generate_parser.add_argument("--m", type=int, required=True, help="Number of edges.")
    generate_parser.add_argument("--plant", type=float, default=0.9, help="Fraction of planted edges.")
    generate_parser.add_argument("--exponent", type=float, default=2.5, help="Power-law exponent.")
    generate_parser.add_argument("--max-degree", type=int, default=3, help="Degree bound of bounded-degree graphs.")
    generate_parser.add_argument("--seed", type=int, default=0, help="Generator seed.")
    generate_parser.add_argument("--out", type=Path, help="Output file, standard output by default.")

    estimate_parser = subparsers.add_parser("estimate", help="Run an estimator on an edge-list file.")
    estimate_parser.add_argument("--input", type=Path, required=True, help="Edge-list file.")
    estimate_parser.add_argument("--estimator", choices=ESTIMATORS, default="meta", help="Estimator.")
    estimate_parser.add_argument("--config", type=Path, help="TOML configuration file.")
    estimate_parser.add_argument("--epsilon", type=float, help="Target accuracy.")
    estimate_parser.add_argument("--mode", choices=[*MODES, "paper-faithful"], help="Parameter mode.")
    estimate_parser.add_argument("--beta", type=float, help="Vertex sampling exponent.")
    estimate_parser.add_argument("--d", type=int, help="Sampling rounds per edge.")
    estimate_parser.add_argument("--trials", type=int, default=1, help="Number of trials.")
    estimate_parser.add_argument("--seed", type=int, default=0, help="Seed of the first trial.")
    estimate_parser.add_argument("--out", type=Path, help="Output CSV file, standard output by default.")

    validate_parser = subparsers.add_parser("validate", help="Run property suites.")
    validate_parser.add_argument("suite", choices=[*SUITES, "all"], help="Suite to run.")

    experiment_parser = subparsers.add_parser("experiment", help="Run an experiment grid.")
    experiment_parser.add_argument("spec", type=Path, help="TOML experiment file.")
    experiment_parser.add_argument("--out", type=Path, help="Output CSV file, overriding the experiment file.")

    plot_parser = subparsers.add_parser("plot", help="Plot ratio-versus-epsilon curves of an experiment table.")
    plot_parser.add_argument("table", type=Path, help="Experiment table.")
    plot_parser.add_argument("--out", type=Path, help="SVG file, next to the table by default.")
    plot_parser.add_argument("--title", help="Figure title.")
    return parser


def _output(path: Path | None) -> TextIO | nullcontext[TextIO]:
    if path is None:
        return nullcontext(sys.stdout)
    return path.open("w", encoding="utf-8", newline="")


def _generate(opts: argparse.Namespace) -> int:
    instance = generate(
        opts.kind,
        opts.n,
        opts.m,
        seed=opts.seed,
        plant_fraction=opts.plant,
        exponent=opts.exponent,
        max_degree=opts.max_degree,
    )
    metadata = f"kind={opts.kind} n={instance.graph.n} m={instance.graph.m} seed={opts.seed}"
    if instance.planted_value is not None:
        metadata += f" planted={instance.planted_value:.10g}"
    with _output(opts.out) as file:
        file.write(format_edge_list(instance.graph, comments=[metadata]))
    print(metadata, file=sys.stderr if opts.out is None else sys.stdout)
    return 0


def _estimate(opts: argparse.Namespace) -> int:
    settings: dict[str, Any] = {}
    if opts.config is not None:
        config = load_config(opts.config)
        settings.update(config.get("parameters", config))
    flags = {"epsilon": opts.epsilon, "mode": opts.mode, "beta": opts.beta, "d": opts.d}
    settings.update({key: value for key, value in flags.items() if value is not None})
    epsilon = float(settings.pop("epsilon", 0.1))
    mode = str(settings.pop("mode", "practical"))
    spec = ExperimentSpec(
        source=opts.input,
        estimator=opts.estimator,
        overrides=settings,
        epsilon=epsilon,
        mode=mode,
        trials=opts.trials,
        base_seed=opts.seed,
        out=opts.out,
    )
    reports = run_trials(spec)
    with _output(spec.out) as file:
        write_reports(reports, file)
    if all(report.terminated_early for report in reports):
        print("dicut-stream: every trial terminated early", file=sys.stderr)
        return 1
    return 0


def _validate(opts: argparse.Namespace) -> int:
    results = run_suite(opts.suite)
    for result in results:
        print(result.line())
    failed = [result for result in results if not result.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    return 1 if failed else 0


def _experiment(opts: argparse.Namespace) -> int:
    grid = ExperimentGrid.from_path(opts.spec)
    out = opts.out or grid.out
    results = run_experiment(grid)
    with _output(out) as file:
        write_table(results, file)
    summary_file = sys.stderr if out is None else sys.stdout
    for estimator, summary in summarize(results).items():
        print(
            f"{estimator}: {summary['cells']:.0f} cells, {summary['failed']:.0f} failed, "
            f"mean ratio {summary['mean_ratio']:.4f}, early terminations {summary['terminated_rate']:.2%}",
            file=summary_file,
        )
    return 1 if all(result.error is not None or not result.values for result in results) else 0


def _plot(opts: argparse.Namespace) -> int:
    output = plot_ratios(opts.table, opts.out or opts.table.with_suffix(".svg"), title=opts.title)
    print(output)
    return 0


COMMANDS = {
    "generate": _generate,
    "estimate": _estimate,
    "validate": _validate,
    "experiment": _experiment,
    "plot": _plot,
}


def main(args: list[str] | None = None) -> int:
    """Run the main program.

    This function is executed when you type `dicut-stream` or `python -m dicut_stream`.

    Parameters:
        args: Arguments passed from the command line.

    Returns:
        An exit code: 0 on success, 1 when every trial failed, 2 on usage errors.
    """
    parser = get_parser()
    opts = parser.parse_args(args=args)
    if opts.command is None:
        parser.print_help()
        return 0
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger(ROOT_NAME).setLevel(opts.log_level)
    try:
        return COMMANDS[opts.command](opts)
    except (DicutError, OSError) as error:
        print(f"dicut-stream: error: {error}", file=sys.stderr)
        return 2
