"""Time-optimal path retiming by recursive reachability analysis.

Given a geometric path, system constraints projected onto it, and a grid,
the solver computes the fastest admissible traversal in two passes of
small linear programs: a backward pass building controllable
squared-velocity intervals and a greedy forward pass.
"""

from .constraints import (
    CanonicalLinearConstraint,
    FirstOrderBound,
    PolytopeSlackConstraint,
    SlackBlock,
    joint_acceleration_bounds,
    joint_velocity_bounds,
    project_second_order,
)
from .discretize import (
    DEFAULT_X_CAP,
    DiscretizedProblem,
    Grid,
    Parameterization,
    collocation,
    constraint_satisfaction_error,
    interpolation_first_order,
    make_grid,
)
from .oracle import DPConfig, dp_controllable, dp_optimal_cost
from .path import GeometricPath, spline_from_waypoints
from .reach import (
    Interval,
    UncertaintyVertexSet,
    admissible_states,
    controllable_sets,
    one_step_set,
    reach_set,
    reachable_sets,
    robust_controllable_sets,
    robust_one_step_set,
)
from .solver import (
    SolveReport,
    Trajectory,
    avp,
    avp_backward,
    duration,
    extract_trajectory,
    recover_slack,
    topp_ra,
    topp_ra_dual,
)

__version__ = "0.1.0"

__all__ = [
    "CanonicalLinearConstraint",
    "FirstOrderBound",
    "PolytopeSlackConstraint",
    "SlackBlock",
    "joint_acceleration_bounds",
    "joint_velocity_bounds",
    "project_second_order",
    "DEFAULT_X_CAP",
    "DiscretizedProblem",
    "Grid",
    "Parameterization",
    "collocation",
    "constraint_satisfaction_error",
    "interpolation_first_order",
    "make_grid",
    "DPConfig",
    "dp_controllable",
    "dp_optimal_cost",
    "GeometricPath",
    "spline_from_waypoints",
    "Interval",
    "UncertaintyVertexSet",
    "admissible_states",
    "controllable_sets",
    "one_step_set",
    "reach_set",
    "reachable_sets",
    "robust_controllable_sets",
    "robust_one_step_set",
    "SolveReport",
    "Trajectory",
    "avp",
    "avp_backward",
    "duration",
    "extract_trajectory",
    "recover_slack",
    "topp_ra",
    "topp_ra_dual",
]
