"""Sinkhorn-type bounds for the quadratic assignment problem via the Johnson-Adams LP relaxation."""
from .lp_solver import (
    LiftedCost,
    Method,
    OuterConfig,
    SolveTrace,
    dual_lower_bound,
    energy,
    solve_accumulation,
    solve_lp,
    solve_proximal,
    solve_regularized,
)
from .projections import (
    JapProjectionConfig,
    ProjectionStats,
    Variant,
    jap_residual,
    kl_geometric_merge,
    project_jap,
    project_olp,
    project_olp_variant,
    project_row_stochastic,
)
from .qap import (
    BoundsReport,
    QapInstance,
    brute_force,
    lift_cost,
    lift_permutation,
    memory_budget,
    qap_energy,
    round_to_permutation,
    solve,
)
from .tensor import GangsterMask, LiftedPoint, build_gangster_mask, diamond, hadamard_log, transpose_pair

__version__ = "0.1.0"
