"""dicut-stream package.

Streaming estimation of the maximum directed cut of a graph.
"""

from __future__ import annotations

from dicut_stream.dense import CoreSet, EdgeReservoir, coreset_estimate, coreset_pass1
from dicut_stream.engine import (
    EstimateReport,
    MemoryAudit,
    SamplerState,
    ThreePassEstimator,
    TwoPassEstimator,
    memory_audit,
    meta_estimate,
    pass1_sample,
    three_pass_estimate,
    two_pass_estimate,
)
from dicut_stream.exceptions import (
    DegreeBoundExceededError,
    DicutError,
    EdgeListParseError,
    EmptyGraphError,
    EmptySampleError,
    ExperimentSpecError,
    InstanceTooLargeError,
    InvalidDegreeOracleError,
    InvalidGraphError,
    MissingDegreeError,
    ParameterError,
    StreamExhaustedError,
)
from dicut_stream.generators import GeneratedInstance, generate
from dicut_stream.graph import (
    Dicut,
    DirectedMultigraph,
    FractionalAssignment,
    dicut_value,
    expected_dicut,
    max_dicut_exact,
    max_dicut_localsearch,
    parse_edge_list,
    read_edge_list,
    write_edge_list,
)
from dicut_stream.local import LocalRule, PairwiseHash, estimate, local_eval, resolve_assignments, sample_hash
from dicut_stream.neighborhoods import (
    BallGraph,
    TypeDistribution,
    TypeId,
    ball_extract,
    canonicalize,
    edge_type_distribution,
    rescaled_distribution,
    sampled_type_counts,
    tv_distance,
)
from dicut_stream.params import ParameterSet
from dicut_stream.reduction import (
    ApproxDegrees,
    CopyVertex,
    ReducedGraph,
    lift_cut,
    make_approx_degrees,
    trevisan_reduce,
)
from dicut_stream.streams import EdgeStream

__all__: list[str] = [
    "ApproxDegrees",
    "BallGraph",
    "CopyVertex",
    "CoreSet",
    "DegreeBoundExceededError",
    "Dicut",
    "DicutError",
    "DirectedMultigraph",
    "EdgeListParseError",
    "EdgeReservoir",
    "EdgeStream",
    "EmptyGraphError",
    "EmptySampleError",
    "EstimateReport",
    "ExperimentSpecError",
    "FractionalAssignment",
    "GeneratedInstance",
    "InstanceTooLargeError",
    "InvalidDegreeOracleError",
    "InvalidGraphError",
    "LocalRule",
    "MemoryAudit",
    "MissingDegreeError",
    "PairwiseHash",
    "ParameterError",
    "ParameterSet",
    "ReducedGraph",
    "SamplerState",
    "StreamExhaustedError",
    "ThreePassEstimator",
    "TwoPassEstimator",
    "TypeDistribution",
    "TypeId",
    "ball_extract",
    "canonicalize",
    "coreset_estimate",
    "coreset_pass1",
    "dicut_value",
    "edge_type_distribution",
    "estimate",
    "expected_dicut",
    "generate",
    "lift_cut",
    "local_eval",
    "make_approx_degrees",
    "max_dicut_exact",
    "max_dicut_localsearch",
    "memory_audit",
    "meta_estimate",
    "parse_edge_list",
    "pass1_sample",
    "read_edge_list",
    "rescaled_distribution",
    "resolve_assignments",
    "sample_hash",
    "sampled_type_counts",
    "three_pass_estimate",
    "trevisan_reduce",
    "tv_distance",
    "two_pass_estimate",
    "write_edge_list",
]
