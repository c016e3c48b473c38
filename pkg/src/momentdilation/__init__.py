"""Moment-matching dilations of linear ODEs into unitary dynamics."""
__version__ = "0.1.0"

from .core import (
    AncillaTriple,
    CostEstimate,
    FamilyTag,
    HermitianSplit,
    dilation_error,
    moment_sequence,
    query_complexity_estimate,
    random_split,
    similarity_transform,
    split_hermitian,
    verify_moments,
)
from .operators import (
    GridSpec,
    IntervalOperator,
    SBPPair,
    build_interval_operator,
    build_sbp,
    choose_theta,
    compact_triple,
    consistency_error,
    encode_vector,
    eval_functional,
    propagation_bound,
    sbp_coefficients,
)
from .evolve import (
    DilatedState,
    IntegratorConfig,
    apply_dilated,
    convergence_study,
    evolve_dilated,
    readout,
    reference_solution,
)
from .report import ExperimentReport
