"""Finite pointed metric spaces, Lipschitz and gauge norms, escape certificates,
Lipschitz-free space norms and polyhedral barrier cones."""

from .convex import (
    UNBOUNDED,
    PolyhedralGauge,
    barrier_membership,
    boundedness_check,
    gauge_eval,
    in_row_span,
    linear_witness,
    norming_constant,
    polar_membership,
    sphere_min,
    support_value,
)
from .errors import *  # noqa: F401,F403
from .free_space import (
    LiftedOperator,
    LipMap,
    Molecule,
    adjoint_compose,
    adjoint_preimage,
    coarse_constants,
    kr_norm,
    kr_norm_dual,
    kr_norm_primal,
    lift_map,
)
from .lipschitz import (
    ClassParams,
    PointFunction,
    TargetSpace,
    gauge_seminorm,
    in_class,
    lip_norm,
    mcshane_extend,
    sample_function,
)
from .metric import (
    FiniteMetricSpace,
    GaugePair,
    dyadic_chain,
    gauge_ratio_inf,
    min_gap,
    random_metric_space,
    snowflake,
    validate_metric,
)
from .porosity import (
    CheckReport,
    EscapeCertificate,
    ExclusionReport,
    PorosityWitness,
    build_escape,
    escape_sequence,
    metric_witness,
    sample_ball_exclusion,
    verify_certificate,
)

__version__ = "0.1.0"
