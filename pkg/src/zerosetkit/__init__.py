"""zerosetkit: random zero sets, compatible sparsification, nested-net
compression, and measured-descent embeddings for finite metric spaces."""

from ._rng import RandomnessSpec, substream
from .applications import (
    LineFunctional,
    SparsestCutInstance,
    brute_isoperimetric,
    brute_sparsest_cut,
    iso_certificate,
    line_functional_embed,
    lq_space,
    sdp_gl_solve,
    sdp_gl_solve_projection,
    sweep_round_cut,
)
from .compression import (
    CompressionOutput,
    SublevelNets,
    growth_ratio_rho,
    nested_sublevel_nets,
    rounding_map,
    universal_compression,
)
from .descent import (
    EmbedConfig,
    MixedZeroSetDistribution,
    MixerConfig,
    ck_scale_index,
    draw_bit_fields,
    euclidean_embed_pipeline,
    frechet_embed,
    log_ball_mass,
    mixed_zeroset_sampler,
)
from .graphs import (
    CompatibilityCertificate,
    CompatibilityReport,
    PairWeighting,
    ThresholdedGraph,
    VertexWeights,
    build_proximity_graph,
    check_compatibility,
    empirical_matching_bound,
    extract_unsaturated_pair,
    fractional_matching,
    max_matching,
    max_matching_bruteforce,
    sparsify_directional,
)
from .metric import (
    EmbeddingReport,
    EuclideanMap,
    FiniteMetricSpace,
    GeneratedInstance,
    PointMeasure,
    QuasiParams,
    distortion,
    doubling_constant_estimate,
    generate_instance,
    instance_from_json,
    instance_to_json,
    negative_type_test,
    p_average_distortion,
    quasisym_check,
    snowflake_embed,
    validate_metric,
)
from .randomzero import (
    ComponentSeparatedSampler,
    GeneralZeroSetDistribution,
    GoodGraph,
    LevelFunction,
    SeparatedPairSampler,
    ZeroSetDistribution,
    beta_cap,
    build_level_function,
    component_separated_sampler,
    duality_solve,
    general_zeroset_sampler,
    glue_scales,
    good_graph_builder,
    layered_pair_sets,
    separated_pipeline,
    slab_membership,
    spreading_estimate,
    tent,
)
from .verify import SCHEMA_VERSION, verify_suite

__version__ = "0.1.0"

__all__ = [
    "RandomnessSpec",
    "substream",
    "LineFunctional",
    "SparsestCutInstance",
    "brute_isoperimetric",
    "brute_sparsest_cut",
    "iso_certificate",
    "line_functional_embed",
    "lq_space",
    "sdp_gl_solve",
    "sdp_gl_solve_projection",
    "sweep_round_cut",
    "CompressionOutput",
    "SublevelNets",
    "growth_ratio_rho",
    "nested_sublevel_nets",
    "rounding_map",
    "universal_compression",
    "EmbedConfig",
    "MixedZeroSetDistribution",
    "MixerConfig",
    "ck_scale_index",
    "draw_bit_fields",
    "euclidean_embed_pipeline",
    "frechet_embed",
    "log_ball_mass",
    "mixed_zeroset_sampler",
    "CompatibilityCertificate",
    "CompatibilityReport",
    "PairWeighting",
    "ThresholdedGraph",
    "VertexWeights",
    "build_proximity_graph",
    "check_compatibility",
    "empirical_matching_bound",
    "extract_unsaturated_pair",
    "fractional_matching",
    "max_matching",
    "max_matching_bruteforce",
    "sparsify_directional",
    "EmbeddingReport",
    "EuclideanMap",
    "FiniteMetricSpace",
    "GeneratedInstance",
    "PointMeasure",
    "QuasiParams",
    "distortion",
    "doubling_constant_estimate",
    "generate_instance",
    "instance_from_json",
    "instance_to_json",
    "negative_type_test",
    "p_average_distortion",
    "quasisym_check",
    "snowflake_embed",
    "validate_metric",
    "ComponentSeparatedSampler",
    "GeneralZeroSetDistribution",
    "GoodGraph",
    "LevelFunction",
    "SeparatedPairSampler",
    "ZeroSetDistribution",
    "beta_cap",
    "build_level_function",
    "component_separated_sampler",
    "duality_solve",
    "general_zeroset_sampler",
    "glue_scales",
    "good_graph_builder",
    "layered_pair_sets",
    "separated_pipeline",
    "slab_membership",
    "spreading_estimate",
    "tent",
    "SCHEMA_VERSION",
    "verify_suite",
    "__version__",
]
