"""Tests for the `engine` module."""

from __future__ import annotations

from collections import Counter
from typing import Any

import pytest

from dicut_stream.engine import (
    REPORT_HEADER,
    EstimateReport,
    SamplerState,
    ThreePassEstimator,
    TwoPassEstimator,
    memory_audit,
    meta_estimate,
    offline_labels,
    pass1_sample,
    run_estimator,
    three_pass_estimate,
    two_pass_estimate,
)
from dicut_stream.generators import generate
from dicut_stream.graph import DirectedMultigraph
from dicut_stream.neighborhoods import edge_type_distribution, tv_distance
from dicut_stream.params import ParameterSet
from dicut_stream.reduction import CopyVertex, make_approx_degrees, trevisan_reduce
from dicut_stream.streams import EdgeStream


def _params(graph: DirectedMultigraph, **overrides: Any) -> ParameterSet:
    values: dict[str, Any] = {
        "beta": 0.0,
        "d": 4,
        "ell": 1,
        "small_m_threshold": 0,
        "dense_dispatch_threshold": 1e18,
        "caps_enabled": False,
    }
    values.update(overrides)
    return ParameterSet.practical(0.1, graph.n, **values)


def _matching(pairs: int) -> DirectedMultigraph:
    return DirectedMultigraph(2 * pairs, tuple((2 * pair, 2 * pair + 1) for pair in range(pairs)))


def test_state_tracking() -> None:
    """Peaks only grow, and sampled copies are those below the count."""
    state = SamplerState()
    state.track("vprime", 3)
    state.track("vprime", 2)
    assert state.peaks["vprime"] == 3
    state.count[4] = 2
    assert state.in_vprime(CopyVertex(4, 1))
    assert not state.in_vprime(CopyVertex(4, 2))
    assert not state.in_vprime(CopyVertex(4, -1))
    assert not state.in_vprime(CopyVertex(5, 0))


def test_report_value_iff_not_terminated() -> None:
    """A report has a value exactly when the run completed."""
    with pytest.raises(ValueError, match="if and only if"):
        EstimateReport(seed=0, branch="two-pass", value=0.5, terminated="vprime-cap", peaks={}, m=1, n=2)
    with pytest.raises(ValueError, match="if and only if"):
        EstimateReport(seed=0, branch="two-pass", value=None, terminated=None, peaks={}, m=1, n=2)


def test_report_row() -> None:
    """Rows follow the report header."""
    report = EstimateReport(
        seed=3,
        branch="three-pass",
        value=1 / 3,
        terminated=None,
        peaks={"vprime": 5, "eprime": 7},
        m=9,
        n=4,
    )
    assert len(report.to_row()) == len(REPORT_HEADER)
    assert report.to_row() == ["3", "three-pass", "0.3333333333", "", "5", "7", "0", "9", "4"]
    failed = EstimateReport(seed=1, branch="two-pass", value=None, terminated="eprime-cap", peaks={}, m=2, n=2)
    assert failed.terminated_early
    assert failed.to_row()[2:4] == ["", "eprime-cap"]


def test_full_sampling_keeps_every_copy() -> None:
    """With `beta = 0` every endpoint becomes a copy and estimated degrees are exact."""
    graph = generate("uniform-random", 12, 30, seed=1).graph
    params = _params(graph)
    state = pass1_sample(EdgeStream.from_graph(graph), params, seed=0, estimate_degrees=True)
    degrees = graph.degrees.tolist()
    assert len(state.vprime) == 2 * graph.m
    assert state.m == graph.m
    assert all(state.count.get(vertex, 0) == degree for vertex, degree in enumerate(degrees))
    assert all(state.est_deg.get(vertex, 0) == degree for vertex, degree in enumerate(degrees))


def test_first_pass_is_seeded() -> None:
    """Same seed, same sample."""
    graph = generate("power-law", 100, 200, seed=2).graph
    params = ParameterSet.practical(0.1, graph.n, beta=0.3, caps_enabled=False)
    first = pass1_sample(EdgeStream.from_graph(graph), params, seed=5)
    second = pass1_sample(EdgeStream.from_graph(graph), params, seed=5)
    assert first.vprime == second.vprime
    assert 0 < len(first.vprime) < 2 * graph.m


@pytest.mark.parametrize("estimator", [two_pass_estimate, three_pass_estimate, meta_estimate])
def test_isolated_edges_are_fully_cut(estimator: Any) -> None:
    """On a perfect matching every sampled edge type is cut surely.

    Parameters:
        estimator: The estimator function (parametrized).
    """
    graph = _matching(4)
    report = estimator(EdgeStream.from_graph(graph), _params(graph), 7)
    assert report.terminated is None
    assert report.value == pytest.approx(1.0)
    assert report.m == 4
    assert report.distribution is not None


def test_three_pass_matches_offline_reduction() -> None:
    """With full sampling the third pass samples exactly the edges of the offline reduction."""
    graph = generate("uniform-random", 10, 15, seed=3).graph
    params = _params(graph)
    estimator = ThreePassEstimator(params, seed=11)
    estimator.run(EdgeStream.from_graph(graph))
    reduced = trevisan_reduce(graph, make_approx_degrees(graph, 0.5, 1.0), 1.0, seed=11, d=params.d)
    assert reduced.removed == 0
    offline = Counter((reduced.copies[tail], reduced.copies[head]) for tail, head in reduced.graph.edges)
    assert Counter(estimator.state.eprime) == offline

    max_copies = int(graph.degrees.max())
    labels = offline_labels(reduced.copies, graph.n, graph.m, max_copies, params.c, 11)
    expected = edge_type_distribution(reduced.graph, labels, params.ell, params.degree_bound)
    assert estimator.distribution is not None
    assert float(tv_distance(estimator.distribution, expected)) == pytest.approx(0, abs=1e-9)


def test_two_pass_matches_three_pass_on_low_degree_graphs() -> None:
    """When every vertex is low-degree the two estimators sample the same edges."""
    graph = generate("uniform-random", 12, 16, seed=4).graph
    params = _params(graph, storedeg_threshold=float(graph.degrees.max() + 1))
    three = ThreePassEstimator(params, seed=2)
    two = TwoPassEstimator(params, seed=2)
    three_report = three.run(EdgeStream.from_graph(graph))
    two_report = two.run(EdgeStream.from_graph(graph))
    assert Counter(three.state.eprime) == Counter(two.state.eprime2)
    assert three_report.value == pytest.approx(two_report.value)
    assert all(two.low_degree(vertex) for vertex in two.state.count)


def test_two_pass_stores_low_degrees() -> None:
    """Low-degree sampled vertices store all their edges."""
    graph = generate("power-law", 200, 300, seed=0).graph
    params = ParameterSet.practical(
        0.1,
        graph.n,
        beta=0.3,
        d=2,
        small_m_threshold=0,
        storedeg_threshold=4.0,
        caps_enabled=False,
    )
    estimator = TwoPassEstimator(params, seed=3)
    estimator.run(EdgeStream.from_graph(graph))
    degrees = graph.degrees.tolist()
    state = estimator.state
    for vertex in state.count:
        if degrees[vertex] < 4:
            assert state.store_deg[vertex] == degrees[vertex]
        else:
            assert state.store_deg[vertex] == 4
    assert len(state.ehat) <= len(state.vprime) * 4
    assert all(estimator.state.in_vprime(tail) and estimator.state.in_vprime(head) for tail, head in state.eprime2)


def test_exact_branch_for_short_streams(triangle: DirectedMultigraph) -> None:
    """Short streams are solved exactly."""
    report = two_pass_estimate(EdgeStream.from_graph(triangle), _params(triangle, small_m_threshold=10), 0)
    assert report.branch == "exact-small"
    assert report.value == pytest.approx(1 / 3)
    assert not report.localsearch


def test_exact_branch_local_search_fallback(triangle: DirectedMultigraph) -> None:
    """Beyond the exact cap the short-stream branch runs local search."""
    params = _params(triangle, small_m_threshold=10, exact_cap=2)
    report = three_pass_estimate(EdgeStream.from_graph(triangle), params, 0)
    assert report.localsearch
    assert report.value == pytest.approx(1 / 3)


def test_empty_stream_terminates() -> None:
    """An empty stream has no value."""
    graph = DirectedMultigraph(4, ())
    report = meta_estimate(EdgeStream.from_graph(graph), _params(graph, small_m_threshold=10), 0)
    assert report.branch == "exact-small"
    assert report.terminated == "empty-graph"
    assert report.value is None


@pytest.mark.parametrize(
    ("estimator", "overrides", "reason"),
    [
        (three_pass_estimate, {"vprime_cap": 1}, "vprime-cap"),
        (two_pass_estimate, {"vprime_cap": 100, "estdeg_nonzero_cap": 1}, "estdeg-cap"),
        (three_pass_estimate, {"vprime_cap": 100, "eprime_cap": 1}, "eprime-cap"),
        (two_pass_estimate, {"vprime_cap": 100, "estdeg_nonzero_cap": 100, "eprime_cap": 1}, "eprime-cap"),
    ],
)
def test_caps_terminate_runs(estimator: Any, overrides: dict, reason: str) -> None:
    """Exceeding a cap ends the run without a value.

    Parameters:
        estimator: The estimator function (parametrized).
        overrides: Parameter overrides (parametrized).
        reason: Expected termination reason (parametrized).
    """
    graph = _matching(4)
    report = estimator(EdgeStream.from_graph(graph), _params(graph, caps_enabled=True, **overrides), 0)
    assert report.terminated == reason
    assert report.value is None
    assert report.terminated_early


def test_disabled_caps_only_audit() -> None:
    """With caps disabled runs complete and the audit reports the violations."""
    graph = _matching(4)
    report = three_pass_estimate(EdgeStream.from_graph(graph), _params(graph, vprime_cap=1, eprime_cap=1), 0)
    assert report.value is not None
    audit = memory_audit(report)
    assert set(audit.violations) >= {"vprime", "eprime"}
    assert audit.caps_disabled
    assert not audit.ok
    assert audit.as_dict()["violations"] == list(audit.violations)


def test_audit_of_completed_run() -> None:
    """Completed runs under default caps pass the audit."""
    graph = generate("power-law", 2000, 500, seed=0).graph
    params = ParameterSet.practical(0.1, graph.n, small_m_threshold=0, dense_dispatch_threshold=1e18)
    report = meta_estimate(EdgeStream.from_graph(graph), params, 0)
    audit = memory_audit(report)
    if report.terminated_early:
        assert report.value is None
    else:
        assert audit.ok
        assert report.peaks["ehat"] <= report.caps["ehat"]


def test_capping_sweeps_overloaded_copies() -> None:
    """Edges of copies above the degree cap are removed and neighbors lose that degree."""
    graph = _matching(2)
    estimator = ThreePassEstimator(_params(graph), seed=0)
    state = estimator.state
    first, second, third = CopyVertex(0, 0), CopyVertex(1, 0), CopyVertex(2, 0)
    state.count = {0: 1, 1: 1, 2: 1}
    state.vprime = [first, second, third]
    state.dcount = {first: estimator.params.degree_cap + 1, second: 2, third: 1}
    kept = estimator._cap_copies([(first, second), (second, third)])  # noqa: SLF001
    assert kept == [(second, third)]
    assert state.dcount == {first: 0, second: 1, third: 1}


def test_dense_dispatch(triangle: DirectedMultigraph) -> None:
    """Streams above the dispatch threshold are solved on the core-set."""
    params = _params(triangle, dense_dispatch_threshold=0, coreset_size=100)
    report = meta_estimate(EdgeStream.from_graph(triangle), params, 0)
    assert report.branch == "dense"
    assert report.value == pytest.approx(1 / 3)
    assert report.peaks["coreset"] == 3


def test_reports_are_seeded() -> None:
    """Runs are deterministic given the seed."""
    graph = generate("uniform-random", 40, 80, seed=6).graph
    params = ParameterSet.practical(0.1, graph.n, beta=0.2, d=4, small_m_threshold=0, caps_enabled=False)
    first = run_estimator("two-pass", EdgeStream.from_graph(graph), params, 9)
    second = run_estimator("two-pass", EdgeStream.from_graph(graph), params, 9)
    assert first == second


def test_run_estimator_names(triangle: DirectedMultigraph) -> None:
    """Estimators are dispatched by name."""
    params = _params(triangle, small_m_threshold=10)
    for name in ("two-pass", "three-pass", "meta"):
        assert run_estimator(name, EdgeStream.from_graph(triangle), params, 0).branch == "exact-small"
    with pytest.raises(KeyError):
        run_estimator("exact", EdgeStream.from_graph(triangle), params, 0)
