"""Safety-aware deployment: desired-path switching, reference selection and policy projection."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike

from gp_skrl.dynamics.bicycle import tracking_error
from gp_skrl.dynamics.reference import ReferencePath, ReferenceState, densify
from gp_skrl.errors import EmptyPathError, GPSKRLError, MissingPolicyError
from gp_skrl.gp.residuals import LearnedDynamics
from gp_skrl.planner.geometry import (
    centroid,
    convex_hull,
    footprint,
    penetration_depth,
    point_distance,
    signed_distance,
)
from gp_skrl.planner.obstacles import Obstacle
from gp_skrl.rl.approximators import KernelPolicy
from gp_skrl.schemas.config import PlannerConfig
from gp_skrl.schemas.vehicle import VehicleParams

Mode = Literal["global", "contour"]

TRACE_FIELDS = ["time", "mode", "rho", "index", "global_index", "a_x", "delta_f", "clearance"]


@dataclass(frozen=True)
class HalfspaceConstraint:
    """a' p <= b."""

    a: tuple[float, float]
    b: float

    def __post_init__(self) -> None:
        if self.a[0] == 0.0 and self.a[1] == 0.0:
            raise ValueError("halfspace normal must be non-zero")

    @classmethod
    def from_segment(cls, p: ArrayLike, q: ArrayLike) -> HalfspaceConstraint:
        """Constraint whose boundary is the line through p and q."""
        p = np.asarray(p, dtype=float)
        d = np.asarray(q, dtype=float) - p
        a = (float(d[1]), float(-d[0]))
        return cls(a=a, b=float(a[0] * p[0] + a[1] * p[1]))


def reference_heading(constraint: HalfspaceConstraint) -> float:
    """Slope angle of the constraint boundary, atan(-a1 / a2); vertical edges give sign(-a1) pi/2."""
    a1, a2 = constraint.a
    if a2 == 0.0:
        return math.copysign(math.pi / 2.0, -a1)
    return math.atan(-a1 / a2)


def segment_headings(points: np.ndarray) -> np.ndarray:
    """Heading of each segment from its constraint line, turned to point along the direction of travel."""
    headings = np.empty(len(points))
    for i in range(len(points) - 1):
        d = points[i + 1] - points[i]
        phi = reference_heading(HalfspaceConstraint.from_segment(points[i], points[i + 1]))
        if math.cos(phi) * d[0] + math.sin(phi) * d[1] < 0.0:
            phi = phi + math.pi if phi <= 0.0 else phi - math.pi
        headings[i] = phi
    headings[-1] = headings[-2] if len(points) > 1 else 0.0
    return headings


@dataclass(eq=False)
class DesiredPath:
    mode: Mode
    path: ReferencePath
    obstacle_id: str | None = None

    def __len__(self) -> int:
        return len(self.path)


@dataclass
class PlannerState:
    desired: DesiredPath
    index: int = 0
    global_index: int = 0
    horizon: int = 20
    # obstacles whose contour was left with a clear rollout while they are still in the zone
    cleared: set[str] = field(default_factory=set)

    @property
    def rho(self) -> int:
        return 1 if self.desired.mode == "contour" else 0


def nearest_reference(
    p: ArrayLike,
    path: DesiredPath | ReferencePath,
    *,
    start: int = 0,
    window: int | None = None,
    monotone: bool = True,
) -> tuple[ReferenceState, int]:
    """Closest path point to p (first index on ties); with ``monotone`` the search starts at ``start``."""
    ref = path.path if isinstance(path, DesiredPath) else path
    n = len(ref)
    if n == 0:
        raise EmptyPathError("cannot select a reference point on an empty path")
    lo = min(max(start, 0), n - 1) if monotone else 0
    hi = n if window is None or not monotone else min(n, lo + window + 1)
    pts = ref.points[lo:hi]
    d2 = np.sum((pts - np.asarray(p, dtype=float)[:2]) ** 2, axis=1)
    idx = lo + int(np.argmin(d2))
    return ref.state(idx), idx


def compute_control(
    x: ArrayLike, reference: ReferenceState, policy: KernelPolicy, cfg: PlannerConfig | None = None
) -> np.ndarray:
    """Error state, features, actor, clamp."""
    cfg = cfg or PlannerConfig()
    e = tracking_error(x, reference.vector, path_frame=cfg.path_frame_errors)
    return policy.action(e, clip=cfg.clip_errors)


def project_policy(state: PlannerState, pi0: KernelPolicy | None, pi1: KernelPolicy | None) -> KernelPolicy:
    """pi1 while following a contour, pi0 on the global path."""
    policy = pi1 if state.rho == 1 else pi0
    if policy is None:
        raise MissingPolicyError(f"no {'planning' if state.rho else 'control'} policy loaded for mode {state.desired.mode!r}")
    return policy


def min_clearance(
    x: ArrayLike, obstacles: list[Obstacle], t: float, params: VehicleParams, width: float
) -> float | None:
    """Signed distance from the vehicle footprint to the nearest original obstacle; None without obstacles."""
    if not obstacles:
        return None
    s = np.asarray(x, dtype=float)
    fp = footprint(s[4], s[5], s[2], params, width)
    return min(signed_distance(fp, obs.polygon(t)) for obs in obstacles)


def rollout_collision_check(
    x: ArrayLike,
    policy: KernelPolicy,
    dynamics: LearnedDynamics,
    path: ReferencePath,
    horizon: int,
    obstacles: list[Obstacle],
    *,
    t: float = 0.0,
    start_index: int = 0,
    cfg: PlannerConfig | None = None,
) -> bool:
    """Roll the control policy along ``path`` for ``horizon`` learned-model steps and report any footprint overlap
    with a dilated obstacle. Obstacles that have not started moving stay where they are; any failure counts as a
    collision."""
    if not obstacles:
        return False
    cfg = cfg or PlannerConfig()
    ts = dynamics.sample_time
    try:
        state = np.asarray(x, dtype=float).copy()
        reach = horizon * ts * max(float(state[0]), 0.0) + 2.0 * dynamics.params.wheelbase + cfg.footprint_width
        near = [
            obs
            for obs in obstacles
            if (obs.is_moving and obs.is_active)
            or point_distance(state[4:6], obs.dilated(t)) <= reach + cfg.rollout_slack
        ]
        if not near:
            return False
        idx = start_index
        for k in range(horizon + 1):
            if not np.all(np.isfinite(state)):
                return True
            fp = footprint(state[4], state[5], state[2], dynamics.params, cfg.footprint_width)
            tk = t + k * ts
            for obs in near:
                if penetration_depth(fp, obs.dilated(tk if obs.is_active else t)) > 0.0:
                    return True
            if k == horizon:
                break
            ref, idx = nearest_reference(state[4:6], path, start=idx, window=cfg.search_window, monotone=cfg.monotone_index)
            u = compute_control(state, ref, policy, cfg)
            state = np.asarray(dynamics.step(state, u), dtype=float).reshape(6)
    except (GPSKRLError, ArithmeticError, ValueError, FloatingPointError) as exc:
        logger.debug("rollout failed ({}); treating it as a collision", exc)
        return True
    return False


def _farthest_arc(polygon: np.ndarray, path: ReferencePath, from_index: int) -> float:
    """Largest arc position among the projections of the polygon vertices onto the path from ``from_index`` on."""
    tail = path.points[from_index:]
    s_max = float(path.arc[from_index])
    for v in polygon:
        j = from_index + int(np.argmin(np.sum((tail - v) ** 2, axis=1)))
        s_max = max(s_max, float(path.arc[j]))
    return s_max


def _exit_point(polygon: np.ndarray, path: ReferencePath, from_index: int, margin: float) -> int:
    """Global path index past the farthest projection of the polygon plus ``margin``."""
    return path.index_at(_farthest_arc(polygon, path, from_index) + margin)


def _hull_index(hull: np.ndarray, point: np.ndarray) -> int:
    return int(np.argmin(np.sum((hull - point) ** 2, axis=1)))


def _chain(hull: np.ndarray, i: int, j: int, step: int) -> np.ndarray:
    n = len(hull)
    out = [hull[i]]
    k = i
    while k != j:
        k = (k + step) % n
        out.append(hull[k])
    return np.asarray(out)


def _length(points: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))


def contour_path(
    position: ArrayLike,
    polygon: np.ndarray,
    global_path: ReferencePath,
    from_index: int,
    cfg: PlannerConfig,
    v_ref: float,
) -> ReferencePath:
    """Shorter way around a dilated obstacle from the vehicle position back onto the global path."""
    p = np.asarray(position, dtype=float)[:2]
    exit_index = _exit_point(polygon, global_path, from_index, cfg.exit_margin)
    e = global_path.points[exit_index]
    hull = convex_hull(np.vstack([p, e, polygon]))
    i, j = _hull_index(hull, p), _hull_index(hull, e)
    ccw, cw = _chain(hull, i, j, 1), _chain(hull, i, j, -1)
    l_ccw, l_cw = _length(ccw), _length(cw)
    if abs(l_ccw - l_cw) > 1e-9:
        chain = ccw if l_ccw < l_cw else cw
    else:
        # equal lengths: keep to the side of the obstacle the vehicle is already on
        c = centroid(polygon)
        t = global_path.points[min(exit_index, len(global_path) - 1)] - global_path.points[min(from_index, exit_index)]
        side = np.sign(t[0] * (p[1] - c[1]) - t[1] * (p[0] - c[0]))
        mid = ccw[len(ccw) // 2]
        chain = ccw if np.sign(t[0] * (mid[1] - c[1]) - t[1] * (mid[0] - c[0])) == side else cw
    if np.linalg.norm(chain[0] - p) > 1e-9:
        chain = np.vstack([p, chain])
    points = densify(chain, cfg.contour_spacing)
    keep = np.concatenate([[True], np.linalg.norm(np.diff(points, axis=0), axis=1) > 1e-9])
    points = points[keep]
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(points, axis=0), axis=1))])
    return ReferencePath(points=points, heading=segment_headings(points), speed=np.full(len(points), v_ref), arc=arc)


def update_desired_path(
    x: ArrayLike,
    state: PlannerState,
    obstacles: list[Obstacle],
    global_path: ReferencePath,
    pi0: KernelPolicy,
    dynamics: LearnedDynamics,
    cfg: PlannerConfig,
    *,
    t: float,
    v_max: float,
) -> DesiredPath:
    """Enter a contour as soon as an obstacle that is still ahead lies inside the look-ahead zone, and leave it
    once the control-policy rollout along the global path is free.

    An obstacle whose contour was left with a clear rollout is recorded in ``state.cleared`` and only triggers a
    new contour if the rollout collides with it again; it is forgotten once it leaves the zone."""
    s = np.asarray(x, dtype=float)
    pos = s[4:6]

    def colliding() -> bool:
        return rollout_collision_check(
            s, pi0, dynamics, global_path, state.horizon, obstacles, t=t, start_index=state.global_index, cfg=cfg
        )

    reach = state.horizon * dynamics.sample_time * v_max
    here = float(global_path.arc[state.global_index])
    zone = []
    for d, k in sorted((point_distance(pos, obs.dilated(t)), k) for k, obs in enumerate(obstacles)):
        polygon = obstacles[k].dilated(t)
        if d <= reach and _farthest_arc(polygon, global_path, state.global_index) > here + 1e-9:
            zone.append(obstacles[k])
    state.cleared &= {obs.obstacle_id for obs in zone}
    fresh = [obs for obs in zone if obs.obstacle_id not in state.cleared]

    if state.desired.mode == "global":
        if fresh:
            target = fresh[0]
        elif zone and colliding():
            target = zone[0]
        else:
            return state.desired
        contour = contour_path(pos, target.dilated(t), global_path, state.global_index, cfg, v_max)
        return DesiredPath("contour", contour, target.obstacle_id)

    if not colliding():
        if state.desired.obstacle_id is not None:
            state.cleared.add(state.desired.obstacle_id)
        return DesiredPath("global", global_path)
    source = next((obs for obs in obstacles if obs.obstacle_id == state.desired.obstacle_id), None)
    if state.index >= len(state.desired) - 1:
        # contour used up while the way back is still blocked
        source = zone[0] if zone else source
    elif source is None or not (source.is_moving and source.is_active):
        return state.desired
    if source is not None:
        contour = contour_path(pos, source.dilated(t), global_path, state.global_index, cfg, v_max)
        return DesiredPath("contour", contour, source.obstacle_id)
    return state.desired


@dataclass(frozen=True, eq=False)
class PlannerDecision:
    control: np.ndarray
    reference: ReferenceState
    mode: Mode
    rho: int
    index: int
    clearance: float | None


@dataclass(frozen=True)
class PlannerTraceRow:
    time: float
    mode: str
    rho: int
    index: int
    global_index: int
    a_x: float
    delta_f: float
    clearance: float | None


@dataclass(eq=False)
class SafetyPlanner:
    """Stateful five-stage deployment loop for one vehicle."""

    global_path: ReferencePath
    pi0: KernelPolicy | None
    pi1: KernelPolicy | None
    dynamics: LearnedDynamics
    obstacles: list[Obstacle]
    cfg: PlannerConfig
    v_max: float
    params: VehicleParams
    trace: list[PlannerTraceRow] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.state = PlannerState(DesiredPath("global", self.global_path), horizon=self.cfg.horizon)

    def reset(self) -> None:
        self.state = PlannerState(DesiredPath("global", self.global_path), horizon=self.cfg.horizon)
        self.trace.clear()
        for obs in self.obstacles:
            obs.reset()

    @property
    def progress(self) -> float:
        """Arc position of the current global reference point."""
        return float(self.global_path.arc[self.state.global_index])

    def _track_global(self, pos: np.ndarray) -> None:
        _, self.state.global_index = nearest_reference(
            pos,
            self.global_path,
            start=self.state.global_index,
            window=self.cfg.search_window,
            monotone=self.cfg.monotone_index,
        )

    def step(self, x: ArrayLike, t: float) -> PlannerDecision:
        s = np.asarray(x, dtype=float)
        for obs in self.obstacles:
            obs.observe(t, float(s[4]))
        self._track_global(s[4:6])

        desired = update_desired_path(
            s, self.state, self.obstacles, self.global_path, self.pi0, self.dynamics, self.cfg, t=t, v_max=self.v_max
        )
        if desired is not self.state.desired:
            if desired.mode != self.state.desired.mode:
                logger.info("t={:.2f}s: desired path {} -> {}", t, self.state.desired.mode, desired.mode)
            self.state.desired = desired
            self.state.index = 0 if desired.mode == "contour" else self.state.global_index

        reference, self.state.index = nearest_reference(
            s[4:6],
            self.state.desired,
            start=self.state.index,
            window=self.cfg.search_window,
            monotone=self.cfg.monotone_index,
        )
        policy = project_policy(self.state, self.pi0, self.pi1)
        u = compute_control(s, reference, policy, self.cfg)
        clearance = min_clearance(s, self.obstacles, t, self.params, self.cfg.footprint_width)
        self.trace.append(
            PlannerTraceRow(
                t,
                self.state.desired.mode,
                self.state.rho,
                self.state.index,
                self.state.global_index,
                float(u[0]),
                float(u[1]),
                clearance,
            )
        )
        return PlannerDecision(u, reference, self.state.desired.mode, self.state.rho, self.state.index, clearance)

    def write_trace_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_FIELDS)
            for row in self.trace:
                writer.writerow(
                    [
                        repr(row.time),
                        row.mode,
                        row.rho,
                        row.index,
                        row.global_index,
                        repr(row.a_x),
                        repr(row.delta_f),
                        "" if row.clearance is None else repr(row.clearance),
                    ]
                )
        return path
