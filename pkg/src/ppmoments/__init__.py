"""Exact and Monte Carlo verification of point process moment identities.

Subpackages:
    combinatorics   exact integer/rational combinatorics and moment formulas
    finite_model    exact engine on finite weighted ground spaces
    difference_ops  point-addition and finite-difference operators
    identities      two-sided evaluation of the moment identities
    montecarlo      continuous-window samplers and seeded estimators
    transforms      hull-conditioned transformation and invariance tests
    cli             batch verification suites (console script: ppmoments)
"""

__version__ = "0.1.0"

from .combinatorics import (
    Cover,
    Partition,
    compound_poisson_moment,
    covers,
    falling_factorial,
    moments_from_factorial,
    partitions,
    stirling2,
    stirling_reindex_gap,
)
from .difference_ops import (
    add_points,
    cover_condition_holds,
    diff,
    diff_multi,
    product_expansion_gap,
)
from .finite_model import (
    Configuration,
    FiniteModel,
    GroundSpace,
    load_model,
    model_from_description,
    pairwise_log_density,
    poisson_log_density,
)
from .identities import (
    IdentityReport,
    dtheta_joint_expansion,
    factorial_moment_identity,
    joint_factorial_identity,
    partition_moment_identity,
    poisson_independence_check,
    stirling_moment_identity,
)
from .montecarlo import (
    Estimate,
    PoissonModel,
    StraussModel,
    Window,
    estimate_factorial_identity,
    estimate_gnz,
    estimate_partition_moment,
    sample_gibbs,
    sample_poisson,
)
from .transforms import (
    Box,
    Disk,
    HullFrame,
    TransformSpec,
    apply_tau,
    hull_frame,
    invariance_suite,
    push_forward,
    rho_tau_check,
    verify_transform_condition,
)
