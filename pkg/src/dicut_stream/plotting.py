"""SVG rendering of experiment tables."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path
from statistics import fmean

from matplotlib.figure import Figure

from dicut_stream.exceptions import ExperimentSpecError
from dicut_stream.logger import get_logger

logger = get_logger(__name__)


def ratio_curves(table: str | Path) -> dict[str, list[tuple[float, float]]]:
    """Mean ratio per accuracy for every estimator of an experiment table.

    Only cells with status `ok` and a ratio are used.

    Parameters:
        table: Path to a table written by [`write_table`][dicut_stream.harness.write_table].

    Raises:
        ExperimentSpecError: When the table lacks the needed columns.

    Returns:
        Points `(epsilon, mean ratio)` sorted by epsilon, per estimator.
    """
    with Path(table).open(encoding="utf-8", newline="") as file:
        reader = csv.DictReader(file)
        missing = {"epsilon", "estimator", "ratio", "status"} - set(reader.fieldnames or ())
        if missing:
            raise ExperimentSpecError(f"experiment table misses columns: {', '.join(sorted(missing))}")
        ratios: dict[str, dict[float, list[float]]] = defaultdict(lambda: defaultdict(list))
        for row in reader:
            if row["status"] == "ok" and row["ratio"]:
                ratios[row["estimator"]][float(row["epsilon"])].append(float(row["ratio"]))
    return {
        estimator: sorted((epsilon, fmean(values)) for epsilon, values in points.items())
        for estimator, points in ratios.items()
    }


def plot_ratios(table: str | Path, output: str | Path, *, title: str | None = None) -> Path:
    """Render ratio-versus-epsilon curves of an experiment table to SVG.

    Parameters:
        table: The experiment table.
        output: The SVG file to write.
        title: Figure title.

    Raises:
        ExperimentSpecError: When the table has no successful cell.

    Returns:
        The path of the written file.
    """
    curves = ratio_curves(table)
    if not curves:
        raise ExperimentSpecError(f"no successful cell to plot in {table}")
    figure = Figure(figsize=(6, 4), layout="constrained")
    axes = figure.add_subplot()
    for estimator, points in sorted(curves.items()):
        epsilons, means = zip(*points)
        axes.plot(epsilons, means, marker="o", label=estimator)
    axes.axhline(1.0, color="grey", linestyle="--", linewidth=0.8)
    axes.axhline(0.5, color="grey", linestyle=":", linewidth=0.8)
    axes.set_xlabel("epsilon")
    axes.set_ylabel("estimate / OPT")
    if title:
        axes.set_title(title)
    axes.legend()
    output = Path(output)
    figure.savefig(output, format="svg")
    logger.info(f"wrote {output}")
    return output
