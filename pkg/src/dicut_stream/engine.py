"""Streaming Max-DICUT estimators: three-pass, two-pass and the density dispatcher.

All estimators share the first pass: every edge endpoint is kept as a new copy
of its vertex with probability `n ** -beta`. Later passes sample the edges of
the reduced graph around the kept copies, and post-processing estimates the
distribution of edge types from the certified part of the sample.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, ClassVar

from dicut_stream.dense import EdgeReservoir, solve_coreset
from dicut_stream.exceptions import DegreeBoundExceededError, EmptySampleError
from dicut_stream.graph import DirectedMultigraph, max_dicut_exact, max_dicut_localsearch
from dicut_stream.local import PairwiseHash, estimate, sample_hash
from dicut_stream.logger import get_logger
from dicut_stream.neighborhoods import TypeDistribution, TypeId, count_certified_types, rescaled_distribution
from dicut_stream.reduction import CopyVertex
from dicut_stream.streams import EdgeStream, Purpose, round_indices, substream

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from dicut_stream.params import ParameterSet

logger = get_logger(__name__)

BRANCHES = ("exact-small", "two-pass", "three-pass", "dense")
"""Branches an estimate can come from."""

SENTINEL = -1
"""Copy index standing for an endpoint whose copy was never drawn."""

REPORT_HEADER = ("seed", "branch", "value", "terminated", "peakV", "peakE", "peakEhat", "m", "n")
"""Columns of [`EstimateReport.to_row`][dicut_stream.engine.EstimateReport.to_row]."""

CopyEdge = tuple[CopyVertex, CopyVertex]


@dataclass
class SamplerState:
    """Bookkeeping of a streaming run."""

    count: dict[int, int] = field(default_factory=dict)
    """Number of sampled copies of every vertex that has one."""
    est_deg: dict[int, float] = field(default_factory=dict)
    """Non-zero estimated degrees."""
    store_deg: dict[int, int] = field(default_factory=dict)
    """Number of stored edges of every sampled vertex."""
    degrees: dict[int, int] = field(default_factory=dict)
    """Exact degrees recorded for sampled vertices (three-pass)."""
    vprime: list[CopyVertex] = field(default_factory=list)
    """Sampled copies, in sampling order."""
    eprime: list[CopyEdge] = field(default_factory=list)
    """Edges sampled in the last pass."""
    eprime2: list[CopyEdge] = field(default_factory=list)
    """Edges after resampling around low-degree vertices (two-pass)."""
    ehat: list[tuple[int, int, int]] = field(default_factory=list)
    """Stored raw edges, with their stream position."""
    dcount: dict[CopyVertex, int] = field(default_factory=dict)
    """Degree of every sampled copy in the reduced graph."""
    m: int = 0
    """Number of edges seen in the first pass."""
    peaks: dict[str, int] = field(default_factory=lambda: dict.fromkeys(PEAK_KEYS, 0))
    """Largest size reached by every structure."""
    terminated: str | None = None
    """Cap or failure that ended the run early."""

    def track(self, name: str, size: int) -> None:
        """Record the current size of a structure."""
        if size > self.peaks.get(name, 0):
            self.peaks[name] = size

    def in_vprime(self, copy: CopyVertex) -> bool:
        """Whether `copy` is a sampled copy."""
        return 0 <= copy.index < self.count.get(copy.parent, 0)


PEAK_KEYS = ("vprime", "eprime", "eprime2", "ehat", "count", "estdeg", "storedeg", "coreset")


@dataclass(frozen=True)
class EstimateReport:
    """Outcome of one estimator run."""

    seed: int
    """Seed of the run."""
    branch: str
    """Branch that produced the value."""
    value: float | None
    """The estimate, absent when the run terminated early."""
    terminated: str | None
    """Cap or failure that ended the run, if any."""
    peaks: Mapping[str, int]
    """Peak size of every structure."""
    m: int
    """Edges seen."""
    n: int
    """Vertex count of the stream."""
    caps: Mapping[str, float] = field(default_factory=dict)
    """Cap of every capped structure."""
    caps_enabled: bool = True
    """Whether caps could terminate the run."""
    localsearch: bool = False
    """Whether the value is a local-search lower bound instead of an exact optimum."""
    distribution: TypeDistribution | None = field(default=None, compare=False, repr=False)
    """Estimated type distribution, for the streaming branches."""

    def __post_init__(self) -> None:
        if (self.value is None) != (self.terminated is not None):
            raise ValueError("a report carries a value if and only if the run was not terminated")

    @property
    def terminated_early(self) -> bool:
        """Whether the run ended without a value."""
        return self.terminated is not None

    def to_row(self) -> list[str]:
        """CSV fields, in [`REPORT_HEADER`][dicut_stream.engine.REPORT_HEADER] order."""
        return [
            str(self.seed),
            self.branch,
            "" if self.value is None else f"{self.value:.10g}",
            self.terminated or "",
            str(self.peaks.get("vprime", 0)),
            str(self.peaks.get("eprime", 0)),
            str(self.peaks.get("ehat", 0)),
            str(self.m),
            str(self.n),
        ]


def encode_copy(copy: CopyVertex, max_copies: int) -> int:
    """Integer key of a copy in the hash domain."""
    return copy.parent * max_copies + copy.index


def copy_hash(n: int, m: int, max_copies: int, c: int, seed: int) -> PairwiseHash:
    """The hash labeling copies, over a domain of `max(2m, n * max_copies)` keys."""
    return sample_hash(max(2 * m, n * max_copies), c, seed)


def _index_bound(estimate: float) -> int:
    return max(1, round(estimate)) if estimate > 0 else 0


class _StreamingEstimator:
    branch: ClassVar[str]
    track_degrees: ClassVar[bool] = False

    def __init__(self, params: ParameterSet, seed: int, state: SamplerState | None = None) -> None:
        self.params = params
        self.seed = seed
        self.state = state if state is not None else SamplerState()
        self.n = params.n
        self.localsearch = False
        self.sample_graph: DirectedMultigraph | None = None
        self.labels: list[int] = []
        self.counts: Counter[TypeId] = Counter()
        self.distribution: TypeDistribution | None = None

    def _terminate(self, reason: str) -> None:
        self.state.terminated = reason
        logger.warning(f"run with seed {self.seed} terminated: {reason}")

    def observe_first(self, position: int, tail: int, head: int) -> None:
        """First-pass step for one edge."""
        state, params = self.state, self.params
        state.m += 1
        if state.terminated:
            return
        kept = substream(self.seed, Purpose.VERTEX_SAMPLE, position).random(2) < params.sampling_probability
        for vertex, hit in zip((tail, head), kept.tolist()):
            if hit:
                index = state.count.get(vertex, 0)
                state.vprime.append(CopyVertex(vertex, index))
                state.count[vertex] = index + 1
        state.track("vprime", len(state.vprime))
        state.track("count", len(state.count))
        if params.caps_enabled and len(state.vprime) > params.vprime_cap:
            self._terminate("vprime-cap")
            return
        if not self.track_degrees:
            return
        probability = float(max(self.n, 1)) ** (-params.beta / 4)
        bumps = substream(self.seed, Purpose.DEGREE_SAMPLE, position).random(2) < probability
        for vertex, hit in zip((tail, head), bumps.tolist()):
            if hit:
                state.est_deg[vertex] = state.est_deg.get(vertex, 0.0) + params.estdeg_increment
        state.track("estdeg", len(state.est_deg))
        if params.caps_enabled and len(state.est_deg) > params.estdeg_nonzero_cap:
            self._terminate("estdeg-cap")

    def first_pass(self, stream: EdgeStream) -> SamplerState:
        """Run the first pass, stopping early on termination."""
        for position, tail, head in stream.replay():
            self.observe_first(position, tail, head)
            if self.state.terminated:
                break
        logger.debug(f"first pass: m={self.state.m}, |V'|={len(self.state.vprime)}")
        return self.state

    def run(self, stream: EdgeStream) -> EstimateReport:
        """Run every pass and the post-processing."""
        self.first_pass(stream)
        return self.finish(stream)

    def finish(self, stream: EdgeStream) -> EstimateReport:
        """Run the passes after the first one."""
        if self.state.terminated:
            return self._report(None)
        if self.state.m <= self.params.small_m_threshold:
            return self._exact_branch(stream)
        self._later_passes(stream)
        if self.state.terminated:
            return self._report(None)
        return self._post_process(self._final_edges())

    def _later_passes(self, stream: EdgeStream) -> None:
        raise NotImplementedError

    def _final_edges(self) -> list[CopyEdge]:
        raise NotImplementedError

    def _exact_branch(self, stream: EdgeStream) -> EstimateReport:
        edges = tuple((tail, head) for _, tail, head in stream.replay())
        if not edges:
            self.state.terminated = "empty-graph"
            return self._report(None, branch="exact-small")
        graph, _ = DirectedMultigraph(stream.n, edges).relabel_dense()
        if graph.n <= self.params.exact_cap:
            value, _ = max_dicut_exact(graph, cap=self.params.exact_cap)
        else:
            logger.warning(f"{graph.n} vertices exceed the exact cap, falling back to local search")
            value, _ = max_dicut_localsearch(graph, restarts=self.params.localsearch_restarts, seed=self.seed)
            self.localsearch = True
        return self._report(float(value), branch="exact-small")

    def _cap_copies(self, edges: list[CopyEdge]) -> list[CopyEdge]:
        state = self.state
        capped = {copy for copy in state.vprime if state.dcount.get(copy, 0) > self.params.degree_cap}
        if not capped:
            return edges
        kept = []
        for edge in edges:
            if edge[0] in capped or edge[1] in capped:
                for endpoint in edge:
                    if state.in_vprime(endpoint):
                        state.dcount[endpoint] -= 1
            else:
                kept.append(edge)
        for copy in capped:
            state.dcount[copy] = 0
        logger.debug(f"capped {len(capped)} copies, {len(edges) - len(kept)} edges removed")
        return kept

    def _post_process(self, edges: list[CopyEdge]) -> EstimateReport:
        state, params = self.state, self.params
        edges = self._cap_copies(edges)
        max_copies = max(state.count.values(), default=1)
        labeling = copy_hash(self.n, state.m, max_copies, params.c, self.seed)
        local = {copy: index for index, copy in enumerate(state.vprime)}
        self.labels = labeling.labels(encode_copy(copy, max_copies) for copy in state.vprime)
        self.sample_graph = DirectedMultigraph(
            len(state.vprime),
            tuple((local[tail], local[head]) for tail, head in edges),
        )
        degree_map = [state.dcount.get(copy, 0) for copy in state.vprime]
        try:
            self.counts = count_certified_types(
                self.sample_graph,
                self.labels,
                params.ell,
                params.degree_bound,
                degree_map,
            )
            self.distribution = rescaled_distribution(self.counts, params.sampling_probability)
        except EmptySampleError:
            self.state.terminated = "empty-sample"
            logger.warning(f"run with seed {self.seed} certified no edge")
            return self._report(None)
        except DegreeBoundExceededError as error:
            self.state.terminated = "degree-bound"
            logger.warning(f"run with seed {self.seed} failed: {error}")
            return self._report(None)
        value = float(estimate(self.distribution, params.local_rule))
        return self._report(value)

    def _report(self, value: float | None, *, branch: str | None = None) -> EstimateReport:
        state, params = self.state, self.params
        report = EstimateReport(
            seed=self.seed,
            branch=branch or self.branch,
            value=value,
            terminated=state.terminated,
            peaks=dict(state.peaks),
            m=state.m,
            n=self.n,
            caps=_caps(params, state),
            caps_enabled=params.caps_enabled,
            localsearch=self.localsearch,
            distribution=self.distribution,
        )
        if value is not None:
            logger.info(f"{report.branch} estimate {value:.6f} (seed {self.seed}, m={state.m})")
        return report


class ThreePassEstimator(_StreamingEstimator):
    """Estimator recording exact degrees in a second pass and sampling edges in a third."""

    branch = "three-pass"

    def _later_passes(self, stream: EdgeStream) -> None:
        state, params = self.state, self.params
        for _, tail, head in stream.replay():
            for vertex in (tail, head):
                if vertex in state.count:
                    state.degrees[vertex] = state.degrees.get(vertex, 0) + 1
        state.dcount = dict.fromkeys(state.vprime, 0)

        for position, tail, head in stream.replay():
            tail_count, head_count = state.count.get(tail, 0), state.count.get(head, 0)
            if not (tail_count and head_count):
                # Only counters change; an edge needs both endpoints sampled.
                self._bump_one_side(position, tail, tail_count, 0)
                self._bump_one_side(position, head, head_count, 1)
                continue
            first = round_indices(self.seed, Purpose.EDGE_ROUNDS, position, 0, state.degrees[tail], params.d)
            second = round_indices(self.seed, Purpose.EDGE_ROUNDS, position, 1, state.degrees[head], params.d)
            for tail_index, head_index in zip(first.tolist(), second.tolist()):
                hit_tail, hit_head = tail_index < tail_count, head_index < head_count
                if hit_tail:
                    state.dcount[CopyVertex(tail, tail_index)] += 1
                if hit_head:
                    state.dcount[CopyVertex(head, head_index)] += 1
                if hit_tail and hit_head:
                    state.eprime.append((CopyVertex(tail, tail_index), CopyVertex(head, head_index)))
                    state.track("eprime", len(state.eprime))
                    if params.caps_enabled and len(state.eprime) > params.eprime_cap:
                        self._terminate("eprime-cap")
                        return

    def _bump_one_side(self, position: int, vertex: int, count: int, side: int) -> None:
        if not count:
            return
        state = self.state
        draws = round_indices(self.seed, Purpose.EDGE_ROUNDS, position, side, state.degrees[vertex], self.params.d)
        for index in draws.tolist():
            if index < count:
                state.dcount[CopyVertex(vertex, index)] += 1

    def _final_edges(self) -> list[CopyEdge]:
        return self.state.eprime


class TwoPassEstimator(_StreamingEstimator):
    """Estimator using estimated degrees, with exact resampling around low-degree vertices."""

    branch = "two-pass"
    track_degrees = True

    def _later_passes(self, stream: EdgeStream) -> None:
        state, params = self.state, self.params
        threshold = params.storedeg_threshold
        state.dcount = dict.fromkeys(state.vprime, 0)
        for position, tail, head in stream.replay():
            tail_count, head_count = state.count.get(tail, 0), state.count.get(head, 0)
            stored = False
            if tail_count and state.store_deg.get(tail, 0) < threshold:
                state.ehat.append((position, tail, head))
                state.store_deg[tail] = state.store_deg.get(tail, 0) + 1
                stored = True
            if head_count and state.store_deg.get(head, 0) < threshold:
                if not stored:
                    state.ehat.append((position, tail, head))
                state.store_deg[head] = state.store_deg.get(head, 0) + 1
            state.track("ehat", len(state.ehat))
            state.track("storedeg", len(state.store_deg))
            if not (tail_count or head_count):
                continue

            tail_bound = _index_bound(state.est_deg.get(tail, 0.0))
            head_bound = _index_bound(state.est_deg.get(head, 0.0))
            first = (
                round_indices(self.seed, Purpose.ESTIMATE_ROUNDS, position, 0, tail_bound, params.d).tolist()
                if tail_bound
                else [SENTINEL] * params.d
            )
            second = (
                round_indices(self.seed, Purpose.ESTIMATE_ROUNDS, position, 1, head_bound, params.d).tolist()
                if head_bound
                else [SENTINEL] * params.d
            )
            for tail_index, head_index in zip(first, second):
                hit_tail = 0 <= tail_index < tail_count
                hit_head = 0 <= head_index < head_count
                if hit_tail:
                    state.dcount[CopyVertex(tail, tail_index)] += 1
                if hit_head:
                    state.dcount[CopyVertex(head, head_index)] += 1
                if hit_tail or hit_head:
                    state.eprime.append((CopyVertex(tail, tail_index), CopyVertex(head, head_index)))
                    state.track("eprime", len(state.eprime))
                    if params.caps_enabled and len(state.eprime) > params.eprime_cap:
                        self._terminate("eprime-cap")
                        return
        self._resample_low_degree()

    def low_degree(self, vertex: int) -> bool:
        """Whether `vertex` is sampled and had all its edges stored."""
        state = self.state
        return state.count.get(vertex, 0) > 0 and state.store_deg.get(vertex, 0) < self.params.storedeg_threshold

    def _draws(self, position: int, side: int, vertex: int, *, stored: bool) -> list[int]:
        # A low-degree vertex stored all its edges, so its bound is positive.
        state = self.state
        bound = state.store_deg.get(vertex, 0) if stored else _index_bound(state.est_deg.get(vertex, 0.0))
        if not bound:
            return []
        return round_indices(self.seed, Purpose.EDGE_ROUNDS, position, side, bound, self.params.d).tolist()

    def _resample_low_degree(self) -> None:
        state = self.state
        low = {vertex for vertex in state.count if self.low_degree(vertex)}
        eprime2 = []
        for edge in state.eprime:
            if edge[0].parent in low or edge[1].parent in low:
                for endpoint in edge:
                    if state.in_vprime(endpoint):
                        state.dcount[endpoint] -= 1
            else:
                eprime2.append(edge)
        state.track("eprime2", len(eprime2))

        for position, tail, head in state.ehat:
            tail_count, head_count = state.count.get(tail, 0), state.count.get(head, 0)
            if tail in low:
                first = self._draws(position, 0, tail, stored=True)
                second = self._draws(position, 1, head, stored=head in low) if head_count else []
                for round_, tail_index in enumerate(first):
                    if tail_index < tail_count:
                        state.dcount[CopyVertex(tail, tail_index)] += 1
                    if second and second[round_] < head_count:
                        state.dcount[CopyVertex(head, second[round_])] += 1
                        if tail_index < tail_count:
                            eprime2.append((CopyVertex(tail, tail_index), CopyVertex(head, second[round_])))
            elif head in low:
                second = self._draws(position, 1, head, stored=True)
                first = self._draws(position, 0, tail, stored=False) if tail_count else []
                for round_, head_index in enumerate(second):
                    if head_index < head_count:
                        state.dcount[CopyVertex(head, head_index)] += 1
                    if first and first[round_] < tail_count:
                        state.dcount[CopyVertex(tail, first[round_])] += 1
                        if head_index < head_count:
                            eprime2.append((CopyVertex(tail, first[round_]), CopyVertex(head, head_index)))
            state.track("eprime2", len(eprime2))

        state.eprime2 = [edge for edge in eprime2 if state.in_vprime(edge[0]) and state.in_vprime(edge[1])]
        logger.debug(f"resampled around {len(low)} low-degree vertices, |E''|={len(state.eprime2)}")

    def _final_edges(self) -> list[CopyEdge]:
        return self.state.eprime2


def _caps(params: ParameterSet, state: SamplerState) -> dict[str, float]:
    vprime_size = state.peaks.get("vprime", 0)
    return {
        "vprime": params.vprime_cap,
        "eprime": params.eprime_cap,
        "estdeg": params.estdeg_nonzero_cap,
        "count": params.vprime_cap,
        "storedeg": params.vprime_cap,
        "ehat": vprime_size * math.ceil(params.storedeg_threshold),
        "coreset": params.coreset_size,
    }


def pass1_sample(
    stream: EdgeStream,
    params: ParameterSet,
    seed: int,
    state: SamplerState | None = None,
    *,
    estimate_degrees: bool = False,
) -> SamplerState:
    """Run the shared first pass.

    Parameters:
        stream: The edge stream.
        params: Parameters.
        seed: Run seed.
        state: State to fill, a fresh one by default.
        estimate_degrees: Also maintain estimated degrees (two-pass variant).

    Returns:
        The state after the pass; `terminated` is set when a cap was exceeded.
    """
    estimator_class = TwoPassEstimator if estimate_degrees else ThreePassEstimator
    return estimator_class(params, seed, state).first_pass(stream)


def three_pass_estimate(stream: EdgeStream, params: ParameterSet, seed: int) -> EstimateReport:
    """Estimate Max-DICUT in three passes (exact degrees of sampled vertices)."""
    return ThreePassEstimator(params, seed).run(stream)


def two_pass_estimate(stream: EdgeStream, params: ParameterSet, seed: int) -> EstimateReport:
    """Estimate Max-DICUT in two passes (estimated degrees plus exact low-degree resampling)."""
    return TwoPassEstimator(params, seed).run(stream)


def meta_estimate(stream: EdgeStream, params: ParameterSet, seed: int) -> EstimateReport:
    """Run the two-pass estimator and the dense branch side by side, keeping the one fit for the density.

    The first pass feeds both the two-pass sampler and the core-set reservoir
    while counting edges. Streams with at most `dense_dispatch_threshold` edges
    continue with the two-pass estimator, others are solved on the core-set.
    """
    sparse = TwoPassEstimator(params, seed)
    reservoir = EdgeReservoir(params.coreset_size, seed)
    for position, tail, head in stream.replay():
        sparse.observe_first(position, tail, head)
        reservoir.add(tail, head)
    m = sparse.state.m
    logger.debug(f"dispatching on m={m} against threshold {params.dense_dispatch_threshold:.6g}")
    if m <= params.dense_dispatch_threshold:
        return sparse.finish(stream)

    coreset = reservoir.coreset()
    peaks = dict.fromkeys(PEAK_KEYS, 0)
    peaks["coreset"] = coreset.k
    value, localsearch = solve_coreset(
        coreset,
        exact_cap=params.exact_cap,
        restarts=params.localsearch_restarts,
        seed=seed,
    )
    logger.info(f"dense estimate {value:.6f} (seed {seed}, m={m}, k={coreset.k})")
    return EstimateReport(
        seed=seed,
        branch="dense",
        value=value,
        terminated=None,
        peaks=peaks,
        m=m,
        n=stream.n,
        caps={"coreset": params.coreset_size},
        caps_enabled=params.caps_enabled,
        localsearch=localsearch,
    )


@dataclass(frozen=True)
class MemoryAudit:
    """Peak sizes of a run, checked against their caps."""

    peaks: Mapping[str, int]
    """Peak size of every structure."""
    caps: Mapping[str, float]
    """Cap of every capped structure."""
    violations: tuple[str, ...]
    """Structures whose peak exceeded their cap."""
    caps_disabled: bool
    """Whether the run ignored its caps."""

    @property
    def ok(self) -> bool:
        """Whether no cap was exceeded."""
        return not self.violations

    def as_dict(self) -> dict[str, Any]:
        """Plain-dictionary view."""
        return {
            "peaks": dict(self.peaks),
            "caps": dict(self.caps),
            "violations": list(self.violations),
            "caps_disabled": self.caps_disabled,
        }


def memory_audit(report: EstimateReport) -> MemoryAudit:
    """Compare the peak size of every structure of a run with its cap."""
    violations = tuple(name for name, cap in report.caps.items() if report.peaks.get(name, 0) > cap)
    if violations and report.caps_enabled:
        logger.warning(f"run with seed {report.seed} exceeded caps: {', '.join(violations)}")
    return MemoryAudit(
        peaks=dict(report.peaks),
        caps=dict(report.caps),
        violations=violations,
        caps_disabled=not report.caps_enabled,
    )


def run_estimator(name: str, stream: EdgeStream, params: ParameterSet, seed: int) -> EstimateReport:
    """Dispatch to a streaming estimator by name (`two-pass`, `three-pass` or `meta`)."""
    estimators = {"two-pass": two_pass_estimate, "three-pass": three_pass_estimate, "meta": meta_estimate}
    return estimators[name](stream, params, seed)


def offline_labels(copies: Sequence[CopyVertex], n: int, m: int, max_copies: int, c: int, seed: int) -> list[int]:
    """Labels the streaming post-processing gives to `copies` for a run with this seed."""
    labeling = copy_hash(n, m, max_copies, c, seed)
    return labeling.labels(encode_copy(copy, max_copies) for copy in copies)
