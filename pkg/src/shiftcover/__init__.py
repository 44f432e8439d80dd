"""Coverings, block approximations and equidistribution checks for powers of
the scaled backward shift lambda*B on l^2."""

__version__ = "0.1.0"

from .approximator import (
    ApproxCertificate,
    EpsilonCondition,
    GridReport,
    analytic_bounds,
    build_common_vector,
    construct_block_vector,
    verify_certificate,
)
from .covering import (
    CoveringPlan,
    Interval,
    NonexistenceCertificate,
    build_covering,
    empirical_coverage,
    g_set_interval,
    g_set_measure_bound,
    locate_block,
    nonexistence_certificate,
    verify_covering,
)
from .errors import ShiftCoverError
from .seqcore import (
    GapSubsequence,
    ReciprocalSumReport,
    SequenceSpec,
    extract_gapped_subsequence,
    materialize,
    reciprocal_partial_sum,
    reciprocal_report,
)
from .shiftspace import (
    FiniteVector,
    LogScalar,
    backward_shift_power,
    l2_distance,
    log_power_error,
    scaled_shift_orbit_point,
)
from .torus import (
    circle_density_check,
    joint_density_check,
    section_measure_estimate,
    star_discrepancy,
)
