"""Reference paths: dense polylines with heading, speed and arc position."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from gp_skrl.dynamics.bicycle import FloatArray
from gp_skrl.errors import DegenerateSpecError
from gp_skrl.schemas.scenarios import PathSpec


@dataclass(frozen=True)
class ReferenceState:
    v_x: float
    v_y: float
    phi: float
    omega: float
    X: float
    Y: float
    index: int
    s: float

    @property
    def vector(self) -> FloatArray:
        return np.array([self.v_x, self.v_y, self.phi, self.omega, self.X, self.Y])


@dataclass(frozen=True, eq=False)
class ReferencePath:
    """Ordered reference points; v_y, omega and u_r are zero."""

    points: FloatArray
    heading: FloatArray
    speed: FloatArray
    arc: FloatArray

    def __post_init__(self) -> None:
        n = len(self.points)
        if self.points.shape != (n, 2) or not (len(self.heading) == len(self.speed) == len(self.arc) == n):
            raise ValueError("reference arrays must share their first dimension and points must be (n, 2)")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def total_length(self) -> float:
        return float(self.arc[-1]) if len(self.arc) else 0.0

    @property
    def states(self) -> FloatArray:
        n = len(self)
        out = np.zeros((n, 6))
        out[:, 0] = self.speed
        out[:, 2] = self.heading
        out[:, 4:] = self.points
        return out

    def state(self, index: int) -> ReferenceState:
        x, y = self.points[index]
        return ReferenceState(
            v_x=float(self.speed[index]),
            v_y=0.0,
            phi=float(self.heading[index]),
            omega=0.0,
            X=float(x),
            Y=float(y),
            index=int(index),
            s=float(self.arc[index]),
        )

    def polyline_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))

    def index_at(self, s: float) -> int:
        return int(min(np.searchsorted(self.arc, s, side="left"), len(self) - 1))

    @classmethod
    def from_points(cls, points: FloatArray, v_ref: float) -> ReferencePath:
        pts = np.asarray(points, dtype=float)
        if len(pts) < 2:
            raise DegenerateSpecError(f"a path needs at least two points, got {len(pts)}")
        seg = np.diff(pts, axis=0)
        seg_len = np.linalg.norm(seg, axis=1)
        if np.any(seg_len <= 0.0):
            raise DegenerateSpecError("consecutive path points must be distinct")
        heading = np.arctan2(seg[:, 1], seg[:, 0])
        heading = np.append(heading, heading[-1])
        arc = np.concatenate([[0.0], np.cumsum(seg_len)])
        return cls(points=pts, heading=heading, speed=np.full(len(pts), float(v_ref)), arc=arc)


def densify(vertices: FloatArray, spacing: float) -> FloatArray:
    """Insert points so that no segment is longer than ``spacing``."""
    out = [vertices[0]]
    for a, b in zip(vertices[:-1], vertices[1:]):
        n = max(1, math.ceil(float(np.linalg.norm(b - a)) / spacing))
        t = np.linspace(0.0, 1.0, n + 1)[1:]
        out.extend(a + (b - a) * t[:, None])
    return np.asarray(out)


def _distinct(points: list[tuple[float, float]]) -> FloatArray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return pts
    keep = [0]
    for i in range(1, len(pts)):
        if np.linalg.norm(pts[i] - pts[keep[-1]]) > 1e-9:
            keep.append(i)
    return pts[keep]


def _racetrack_points(spec: PathSpec) -> FloatArray:
    """Rounded regular polygon: n straights joined by left arcs of 2*pi/n each."""
    n = spec.n_sides
    radius = spec.corner_radius
    turn = 2.0 * math.pi / n
    straight = (spec.total_length - 2.0 * math.pi * radius) / n
    if straight < 0:
        raise DegenerateSpecError(
            f"total_length={spec.total_length} is shorter than the corners alone ({2 * math.pi * radius:.3f} m)"
        )
    side = straight + radius * turn
    count = max(2, math.ceil(spec.total_length / spec.spacing))
    s_values = np.linspace(0.0, spec.total_length, count + 1)

    # start pose of each side
    poses = []
    x, y, h = spec.origin[0], spec.origin[1], spec.heading
    for _ in range(n):
        poses.append((x, y, h))
        x += straight * math.cos(h)
        y += straight * math.sin(h)
        cx, cy = x - radius * math.sin(h), y + radius * math.cos(h)
        h += turn
        x, y = cx + radius * math.sin(h), cy - radius * math.cos(h)

    pts = np.empty((len(s_values), 2))
    for i, s in enumerate(s_values):
        k = min(int(s // side), n - 1)
        local = s - k * side
        x0, y0, h0 = poses[k]
        if local <= straight:
            pts[i] = (x0 + local * math.cos(h0), y0 + local * math.sin(h0))
        else:
            xs, ys = x0 + straight * math.cos(h0), y0 + straight * math.sin(h0)
            cx, cy = xs - radius * math.sin(h0), ys + radius * math.cos(h0)
            hh = h0 + (local - straight) / radius
            pts[i] = (cx + radius * math.sin(hh), cy - radius * math.cos(hh))
    return pts


def build_reference(spec: PathSpec, v_max: float) -> ReferencePath:
    """Dense reference polyline for a straight line, a racetrack, or a waypoint list."""
    if spec.kind == "racetrack":
        points = _racetrack_points(spec)
    else:
        vertices = _distinct(spec.points)
        if len(vertices) < 2:
            raise DegenerateSpecError(f"{spec.kind} path needs at least two distinct points, got {spec.points}")
        if spec.kind == "straight" and len(vertices) != 2:
            raise DegenerateSpecError(f"straight path takes exactly two points, got {len(vertices)}")
        points = densify(vertices, spec.spacing)
    return ReferencePath.from_points(points, v_max)
