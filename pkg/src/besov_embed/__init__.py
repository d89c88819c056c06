"""Decide embeddings of anisotropic Besov spaces into isotropic Sobolev spaces."""
from .decision import (
    ConditionCheck,
    Outcome,
    Route,
    Status,
    Variant,
    Verdict,
    decide,
    decide_homogeneous,
    decide_inhomogeneous,
    decide_via_summability,
    sharpness_region,
)
from .exponents import (
    INF,
    EmbeddingParams,
    composite_exponent,
    conjugate,
    n_star,
    parse_exponent,
    q_nabla,
)
from .sequences import (
    Domain,
    Membership,
    build_sequence_spec,
    classify_membership,
    numeric_probe,
    term_value,
)
from .spectral import (
    AnalyzedMatrix,
    InputMatrix,
    expansive_normal_form,
    geometric_multiplicity,
    isotropy_degree,
    matrix_power_norm,
    max_jordan_block_size,
    spectral_analyze,
)

__version__ = "0.1.0"
