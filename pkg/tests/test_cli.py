"""Tests for the `cli` module."""

from __future__ import annotations

import csv
import io
from typing import TYPE_CHECKING

import pytest

from dicut_stream import cli, debug, validation
from dicut_stream.validation import PropertyResult
from tests import FIXTURES_DIR

if TYPE_CHECKING:
    from pathlib import Path


def test_main() -> None:
    """Basic CLI test."""
    assert cli.main([]) == 0


def test_show_help(capsys: pytest.CaptureFixture) -> None:
    """Show help.

    Parameters:
        capsys: Pytest fixture to capture output.
    """
    with pytest.raises(SystemExit):
        cli.main(["-h"])
    captured = capsys.readouterr()
    assert "dicut-stream" in captured.out


def test_show_version(capsys: pytest.CaptureFixture) -> None:
    """Show version.

    Parameters:
        capsys: Pytest fixture to capture output.
    """
    with pytest.raises(SystemExit):
        cli.main(["-V"])
    captured = capsys.readouterr()
    assert debug.get_version() in captured.out


def test_show_debug_info(capsys: pytest.CaptureFixture, monkeypatch: pytest.MonkeyPatch) -> None:
    """Show debug information.

    Parameters:
        capsys: Pytest fixture to capture output.
        monkeypatch: Pytest fixture to set environment variables.
    """
    monkeypatch.setenv("DICUT_STREAM_THREADS", "2")
    with pytest.raises(SystemExit):
        cli.main(["--debug-info"])
    captured = capsys.readouterr().out.lower()
    assert "python" in captured
    assert "system" in captured
    assert "`dicut_stream_threads`: `2`" in captured
    assert "numpy" in captured
    assert "`networkx` v" in captured
    assert "__worker threads__: 2" in captured
    assert "`mode`: practical" in captured
    assert "`beta`: 0.15" in captured


def test_debug_info_reports_invalid_thread_count(monkeypatch: pytest.MonkeyPatch) -> None:
    """A bad thread variable is reported instead of raised.

    Parameters:
        monkeypatch: Pytest fixture to set environment variables.
    """
    monkeypatch.setenv("DICUT_STREAM_THREADS", "many")
    info = debug.get_debug_info()
    assert info.workers.startswith("invalid")
    assert info.variables["DICUT_STREAM_THREADS"] == "many"
    assert info.defaults["d"] == 32
    assert set(info.versions) == set(debug.STACK)


def test_unknown_version() -> None:
    """Missing distributions have a placeholder version."""
    assert debug.get_version("surely-not-installed-dicut") == "0.0.0"


def test_generate_is_reproducible(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    """The same seed writes the same file.

    Parameters:
        tmp_path: Temporary directory.
        capsys: Pytest fixture to capture output.
    """
    first, second = tmp_path / "first.txt", tmp_path / "second.txt"
    for path in (first, second):
        assert cli.main(["generate", "--n", "100", "--m", "400", "--seed", "1", "--out", str(path)]) == 0
    lines = first.read_text().splitlines()
    assert lines[0] == "100 400"
    assert lines[1] == "# kind=uniform-random n=100 m=400 seed=1"
    assert len(lines) == 402
    assert first.read_bytes() == second.read_bytes()
    assert "kind=uniform-random" in capsys.readouterr().out


def test_generate_planted_to_stdout(capsys: pytest.CaptureFixture) -> None:
    """Planted instances report their planted value.

    Parameters:
        capsys: Pytest fixture to capture output.
    """
    assert cli.main(["generate", "--kind", "planted-dicut", "--n", "20", "--m", "100", "--plant", "0.75"]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("20 100\n")
    assert "planted=0.75" in captured.err


def test_estimate_exact(capsys: pytest.CaptureFixture) -> None:
    """The exact estimator solves the triangle.

    Parameters:
        capsys: Pytest fixture to capture output.
    """
    assert cli.main(["estimate", "--input", str(FIXTURES_DIR / "triangle.txt"), "--estimator", "exact"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0][:3] == ["seed", "branch", "value"]
    assert rows[1][1:3] == ["exact-small", "0.3333333333"]


def test_estimate_trials_to_file(tmp_path: Path) -> None:
    """One row is written per trial.

    Parameters:
        tmp_path: Temporary directory.
    """
    out = tmp_path / "reports.csv"
    args = ["estimate", "--input", str(FIXTURES_DIR / "triangle.txt"), "--estimator", "exact"]
    assert cli.main([*args, "--trials", "5", "--seed", "10", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert [row[0] for row in rows[1:]] == ["10", "11", "12", "13", "14"]


def test_estimate_with_config(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    """Configuration files provide parameter overrides.

    Parameters:
        tmp_path: Temporary directory.
        capsys: Pytest fixture to capture output.
    """
    config = tmp_path / "config.toml"
    config.write_text("[parameters]\nepsilon = 0.2\nsmall_m_threshold = 10\ncaps_enabled = false\n")
    args = ["estimate", "--input", str(FIXTURES_DIR / "triangle.txt"), "--estimator", "three-pass"]
    assert cli.main([*args, "--config", str(config)]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[1][1:3] == ["exact-small", "0.3333333333"]


def test_estimate_every_trial_terminated(capsys: pytest.CaptureFixture) -> None:
    """Exit code 1 when no trial produced a value.

    Parameters:
        capsys: Pytest fixture to capture output.
    """
    args = ["estimate", "--input", str(FIXTURES_DIR / "triangle.txt"), "--estimator", "three-pass", "--beta", "0"]
    assert cli.main(args) == 1
    captured = capsys.readouterr()
    assert "vprime-cap" in captured.out
    assert "every trial terminated early" in captured.err


def test_estimate_missing_file(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    """Unreadable inputs exit with code 2.

    Parameters:
        tmp_path: Temporary directory.
        capsys: Pytest fixture to capture output.
    """
    assert cli.main(["estimate", "--input", str(tmp_path / "missing.txt")]) == 2
    assert "dicut-stream: error:" in capsys.readouterr().err


def test_invalid_epsilon(capsys: pytest.CaptureFixture) -> None:
    """Invalid parameters exit with code 2.

    Parameters:
        capsys: Pytest fixture to capture output.
    """
    assert cli.main(["estimate", "--input", str(FIXTURES_DIR / "triangle.txt"), "--epsilon", "0.7"]) == 2
    assert "epsilon" in capsys.readouterr().err


def test_unknown_suite() -> None:
    """Unknown suites are usage errors."""
    with pytest.raises(SystemExit) as exit_info:
        cli.main(["validate", "speed"])
    assert exit_info.value.code == 2


@pytest.mark.parametrize(("successes", "code"), [(2, 0), (1, 1)])
def test_validate_exit_code(
    monkeypatch: pytest.MonkeyPatch,
    capsys: pytest.CaptureFixture,
    successes: int,
    code: int,
) -> None:
    """A failing property makes the command fail.

    Parameters:
        monkeypatch: Pytest fixture to replace the suite.
        capsys: Pytest fixture to capture output.
        successes: Successes of the property (parametrized).
        code: Expected exit code (parametrized).
    """
    result = PropertyResult("reduction", "stub", successes, 2, 2)
    monkeypatch.setitem(validation.SUITES, "reduction", (lambda: result,))
    assert cli.main(["validate", "reduction"]) == code
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == result.line()
    assert lines[1] == f"{int(code == 0)}/1 properties passed"


def test_experiment_and_plot(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    """Experiments write a table that can be plotted.

    Parameters:
        tmp_path: Temporary directory.
        capsys: Pytest fixture to capture output.
    """
    table = tmp_path / "table.csv"
    assert cli.main(["experiment", str(FIXTURES_DIR / "grid.toml"), "--out", str(table)]) == 0
    rows = list(csv.DictReader(table.open()))
    assert len(rows) == 12
    output = capsys.readouterr().out
    assert "exact: 6 cells, 0 failed, mean ratio 1.0000" in output

    assert cli.main(["plot", str(table), "--title", "grid"]) == 0
    svg = tmp_path / "table.svg"
    assert capsys.readouterr().out.strip() == str(svg)
    assert svg.read_text().lstrip().startswith("<?xml")
