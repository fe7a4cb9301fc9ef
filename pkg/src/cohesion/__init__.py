"""Cohesion of weighted triplet comparison spaces."""

from .core import (
    CohesionMatrix,
    CommunityGraph,
    LocalDepthVector,
    cohesion,
    cohesion_matrix,
    community_graph,
    legacy_cohesion,
    legacy_to_generalized,
    local_depth,
    local_mass,
)
from .generators import GeneratorSpec, generate, generate_detailed
from .spaces import (
    AxiomReport,
    DissimilaritySpace,
    TiePolicy,
    TieError,
    TripletComparisonSpace,
    ValidationError,
    aggregate_outlier_responses,
    aggregate_standard_queries,
    aggregate_weights,
    induced_triplet,
    validate_axioms,
)
from .structure import (
    PointLikeFamily,
    PointLikePartition,
    QuotientSpace,
    XTransformation,
    apply_x_transformation,
    enumerate_point_like,
    is_point_like,
    make_partition,
    point_like_partitions,
    quotient,
    subspace,
)

__all__ = [
    "CohesionMatrix",
    "CommunityGraph",
    "LocalDepthVector",
    "cohesion",
    "cohesion_matrix",
    "community_graph",
    "legacy_cohesion",
    "legacy_to_generalized",
    "local_depth",
    "local_mass",
    "GeneratorSpec",
    "generate",
    "generate_detailed",
    "AxiomReport",
    "DissimilaritySpace",
    "TiePolicy",
    "TieError",
    "TripletComparisonSpace",
    "ValidationError",
    "aggregate_outlier_responses",
    "aggregate_standard_queries",
    "aggregate_weights",
    "induced_triplet",
    "validate_axioms",
    "PointLikeFamily",
    "PointLikePartition",
    "QuotientSpace",
    "XTransformation",
    "apply_x_transformation",
    "enumerate_point_like",
    "is_point_like",
    "make_partition",
    "point_like_partitions",
    "quotient",
    "subspace",
]

__version__ = "0.1.0"
