"""Static and scheduled obstacles in their original and dilated forms."""

from __future__ import annotations

import math

import numpy as np
from loguru import logger

from gp_skrl.errors import DegenerateShapeError
from gp_skrl.planner.geometry import convex_ccw, dilate_polygon, ellipse_polygon
from gp_skrl.schemas.scenarios import MotionSpec, ObstacleSpec


class _Schedule:
    """Piecewise-linear waypoint motion at constant speed, extrapolated along the last segment."""

    def __init__(self, motion: MotionSpec) -> None:
        pts = np.asarray(motion.waypoints, dtype=float)
        seg = np.diff(pts, axis=0)
        lengths = np.linalg.norm(seg, axis=1)
        keep = lengths > 0
        if not np.any(keep):
            raise ValueError("a motion schedule needs two distinct waypoints")
        self.origin = pts[0]
        self.points = np.vstack([pts[0], pts[1:][keep]])
        self.arc = np.concatenate([[0.0], np.cumsum(lengths[keep])])
        self.speed = motion.speed
        self.trigger_x = motion.trigger_x
        last = self.points[-1] - self.points[-2]
        self._exit_dir = last / np.linalg.norm(last)

    def displacement(self, elapsed: float) -> np.ndarray:
        s = max(elapsed, 0.0) * self.speed
        if s >= self.arc[-1]:
            pos = self.points[-1] + (s - self.arc[-1]) * self._exit_dir
        else:
            pos = np.array([np.interp(s, self.arc, self.points[:, 0]), np.interp(s, self.arc, self.points[:, 1])])
        return pos - self.origin


class Obstacle:
    """One obstacle: base polygon, dilated polygon and optional motion schedule."""

    def __init__(self, spec: ObstacleSpec, margin: float, *, ellipse_vertices: int = 24) -> None:
        self.spec = spec
        self.obstacle_id = spec.obstacle_id
        self.margin = float(margin)
        if spec.kind == "polygon":
            self.base = convex_ccw(spec.vertices)
            self.base_dilated = dilate_polygon(self.base, self.margin)
        else:
            self.base = ellipse_polygon(spec.center, spec.semi_axes, spec.angle, ellipse_vertices)
            grown = (spec.semi_axes[0] + self.margin, spec.semi_axes[1] + self.margin)
            self.base_dilated = ellipse_polygon(spec.center, grown, spec.angle, ellipse_vertices)
        self.schedule = _Schedule(spec.motion) if spec.motion is not None else None
        self.activated_at: float | None = None
        if self.schedule is not None and self.schedule.trigger_x is None:
            self.activated_at = 0.0

    @property
    def is_moving(self) -> bool:
        return self.schedule is not None

    @property
    def is_active(self) -> bool:
        return self.activated_at is not None

    def reset(self) -> None:
        self.activated_at = 0.0 if self.schedule is not None and self.schedule.trigger_x is None else None

    def observe(self, t: float, ego_x: float) -> None:
        """Start the schedule once the ego vehicle passes the trigger."""
        if self.schedule is None or self.activated_at is not None:
            return
        if self.schedule.trigger_x is not None and ego_x > self.schedule.trigger_x:
            self.activated_at = t
            logger.info("obstacle {} starts moving at t={:.2f}s", self.obstacle_id, t)

    def offset(self, t: float) -> np.ndarray:
        if self.schedule is None or self.activated_at is None:
            return np.zeros(2)
        return self.schedule.displacement(t - self.activated_at)

    def polygon(self, t: float) -> np.ndarray:
        return self.base + self.offset(t)

    def dilated(self, t: float) -> np.ndarray:
        return self.base_dilated + self.offset(t)


def build_obstacles(specs: list[ObstacleSpec], margin: float, *, ellipse_vertices: int = 24) -> list[Obstacle]:
    ids = [s.obstacle_id for s in specs]
    if len(set(ids)) != len(ids):
        raise ValueError(f"obstacle ids must be unique, got {ids}")
    return [Obstacle(s, margin, ellipse_vertices=ellipse_vertices) for s in specs]


def default_margin(width: float) -> float:
    """Vehicle half-width plus 0.3 m."""
    return 0.5 * width + 0.3


def dilate(obstacle: ObstacleSpec, margin: float) -> ObstacleSpec:
    """Dilated copy of an obstacle spec: offset polygon vertices, or semi-axes grown by the margin."""
    if margin < 0:
        raise ValueError(f"dilation margin must be non-negative, got {margin}")
    if obstacle.kind == "polygon":
        grown = dilate_polygon(obstacle.vertices, margin)
        return obstacle.model_copy(update={"vertices": [tuple(map(float, v)) for v in grown]})
    if min(obstacle.semi_axes) <= 0 or not all(math.isfinite(a) for a in obstacle.semi_axes):
        raise DegenerateShapeError(f"ellipse semi-axes must be positive, got {obstacle.semi_axes}")
    a, b = obstacle.semi_axes
    return obstacle.model_copy(update={"semi_axes": (a + margin, b + margin)})
