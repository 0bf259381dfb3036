"""Random walks and Lipschitz harmonic functions on polynomial-growth groups."""

from .groups import (
    BallIndex,
    GeneratingSet,
    GroupDescriptor,
    MarkedSubgroup,
    abelianize,
    coset_decompose,
    dihedral_infinite,
    direct_product,
    enumerate_ball,
    free_abelian,
    group_mul,
    heisenberg3,
    king_generators,
    nilpotent_core,
    standard_generators,
    subgroup_even_sum,
    subgroup_full,
    subgroup_mZ,
    subgroup_rotation,
    word_length,
)
from .harmonic import (
    INCONSISTENT,
    AffineHarmonic,
    Hf1Report,
    LipschitzReport,
    dim_hf1,
    lipschitz_seminorm,
    liouville_growth,
    restrict_affine,
    theta_gradient,
    translate_defect,
    verify_harmonic,
)
from .measures import (
    DriftVector,
    FiniteMeasure,
    SasReport,
    check_sas,
    convolve,
    drift_abelian,
    rng_stream,
    sample,
    simple_random_walk,
)
from .straightening import (
    DefectReport,
    HarmonicCoordinates,
    Linearization,
    QiMapExpr,
    abelian_defect,
    check_coarsely_affine,
    coordinates,
    eval_qi,
    extract_linearization,
    homogenize,
    qi_map,
    straightening_deviation,
)
from .walks import (
    EmpiricalMeasure,
    HittingSample,
    InductionConstants,
    WalkConfig,
    estimate_T,
    hitting_measure,
    induce_harmonic,
    induction_constants,
    simulate_hit,
)

__version__ = "0.1.0"
