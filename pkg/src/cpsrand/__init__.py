"""Exact computations on computable probability spaces: reals, balls, measures,
randomness tests and Birkhoff averages on Cantor space and the unit interval."""
from .errors import *  # noqa: F401,F403
from .exact_core import (
    ApproxReal,
    Ordering,
    SemiReal,
    as_rational,
    combine,
    const,
    dyadic,
    eval_real,
    format_rational,
    lift,
    parse_rational,
    semis_to_computable,
    separate,
    separate_within,
    sqrt_oracle,
)
from .spaces import (
    CANTOR,
    INTERVAL,
    ApproxPoint,
    EffectiveOpen,
    IdealBall,
    Space,
    Verdict,
    ball_membership,
    cantor_distance,
    cylinder_ball,
    cylinder_balls,
    cylinder_open,
    distance,
    hit_region,
    interval_ball,
    open_intersect,
    open_membership,
    open_union,
)
from .measures import (
    ComputableMeasure,
    FiniteMeasure,
    almost_decidable_balls,
    almost_decidable_radii,
    atomic_mixture,
    bernoulli,
    derive_bounds,
    find_zero_measure_point,
    lebesgue,
    piecewise_density,
    prokhorov,
    prokhorov_bisect,
    pushforward,
    quadratic_atoms,
)
from .isomorphism import CdfIsomorphism, binary_decode, binary_expand, cdf_forward, cdf_inverse, expand_point
from .dynamics import (
    CorrelationBound,
    DynSystem,
    ObservableFn,
    birkhoff_average,
    correlation,
    cylinder,
    deviation_measure,
    doubling,
    dyadic_indicator,
    interpolation_gap_check,
    iterate,
    make_schedule,
    manneville_pomeau,
    mp_orbit_enclosure,
    rotation,
    shift,
    step_approx,
    typicality_experiment,
    verify_mixing,
)
from .randomness import (
    BCTest,
    FailureCertificate,
    MLTest,
    SchnorrTest,
    StrongBCTest,
    WitnessedTest,
    bc_to_ml,
    builtin_test,
    construct_failing_point,
    deviation_schnorr_test,
    oscillating_point,
    strong_bc_to_schnorr,
    verify_failure,
)

__version__ = "0.1.0"
