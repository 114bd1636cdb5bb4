from gp_skrl.planner.geometry import (
    convex_ccw,
    dilate_polygon,
    ellipse_polygon,
    footprint,
    signed_distance,
)
from gp_skrl.planner.obstacles import Obstacle, build_obstacles, default_margin, dilate
from gp_skrl.planner.planner import (
    DesiredPath,
    HalfspaceConstraint,
    PlannerDecision,
    PlannerState,
    SafetyPlanner,
    compute_control,
    contour_path,
    min_clearance,
    nearest_reference,
    project_policy,
    reference_heading,
    rollout_collision_check,
    update_desired_path,
)

__all__ = [
    "DesiredPath",
    "HalfspaceConstraint",
    "Obstacle",
    "PlannerDecision",
    "PlannerState",
    "SafetyPlanner",
    "build_obstacles",
    "compute_control",
    "contour_path",
    "convex_ccw",
    "default_margin",
    "dilate",
    "dilate_polygon",
    "ellipse_polygon",
    "footprint",
    "min_clearance",
    "nearest_reference",
    "project_policy",
    "reference_heading",
    "rollout_collision_check",
    "signed_distance",
    "update_desired_path",
]
