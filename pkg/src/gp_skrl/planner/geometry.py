"""Convex polygon helpers: orientation, ellipse polygons, dilation, footprints and clearance."""

from __future__ import annotations

import math

import numpy as np
import shapely
from numpy.typing import ArrayLike
from shapely.geometry import MultiPoint, Point, Polygon
from shapely.geometry.polygon import orient

from gp_skrl.errors import DegenerateShapeError
from gp_skrl.schemas.vehicle import VehicleParams

_AREA_EPS = 1e-9


def signed_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def convex_ccw(vertices: ArrayLike) -> np.ndarray:
    """Validate a convex polygon and return its vertices counter-clockwise."""
    v = np.asarray(vertices, dtype=float).reshape(-1, 2)
    if len(v) >= 2 and np.allclose(v[0], v[-1]):
        v = v[:-1]
    if len(v) < 3:
        raise DegenerateShapeError(f"a polygon needs at least 3 vertices, got {len(v)}")
    area = signed_area(v)
    if abs(area) < _AREA_EPS:
        raise DegenerateShapeError("polygon has zero area")
    if area < 0:
        v = v[::-1].copy()
    edges = np.roll(v, -1, axis=0) - v
    turn = edges[:, 0] * np.roll(edges[:, 1], -1) - edges[:, 1] * np.roll(edges[:, 0], -1)
    if np.any(turn < -1e-9):
        raise DegenerateShapeError("polygon is not convex")
    return v


def ellipse_polygon(center: ArrayLike, semi_axes: ArrayLike, angle: float, n_vertices: int = 24) -> np.ndarray:
    """Circumscribed n-gon of an ellipse, counter-clockwise; the ellipse lies inside it."""
    a, b = (float(s) for s in semi_axes)
    if a <= 0 or b <= 0:
        raise DegenerateShapeError(f"ellipse semi-axes must be positive, got ({a}, {b})")
    if n_vertices < 3:
        raise DegenerateShapeError(f"an ellipse polygon needs at least 3 vertices, got {n_vertices}")
    t = 2.0 * math.pi * np.arange(n_vertices) / n_vertices
    scale = 1.0 / math.cos(math.pi / n_vertices)
    local = np.column_stack([a * scale * np.cos(t), b * scale * np.sin(t)])
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.asarray(center, dtype=float)


def to_shapely(vertices: np.ndarray) -> Polygon:
    return Polygon(vertices)


def from_shapely(polygon: Polygon) -> np.ndarray:
    coords = np.asarray(orient(polygon, 1.0).exterior.coords)
    return coords[:-1]


def dilate_polygon(vertices: ArrayLike, margin: float) -> np.ndarray:
    """Mitred outward offset: every edge moves out by ``margin`` and vertices follow the bisectors."""
    if margin < 0:
        raise ValueError(f"dilation margin must be non-negative, got {margin}")
    v = convex_ccw(vertices)
    if margin == 0:
        return v.copy()
    grown = to_shapely(v).buffer(margin, join_style="mitre", mitre_limit=1e6)
    return convex_ccw(from_shapely(grown))


def centroid(vertices: np.ndarray) -> np.ndarray:
    c = to_shapely(vertices).centroid
    return np.array([c.x, c.y])


def footprint(x: float, y: float, phi: float, params: VehicleParams, width: float) -> np.ndarray:
    """Vehicle rectangle from -l_r to +l_f along the heading, counter-clockwise."""
    c, s = math.cos(phi), math.sin(phi)
    half = 0.5 * width
    local = np.array([[-params.l_r, -half], [params.l_f, -half], [params.l_f, half], [-params.l_r, half]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([x, y])


def _axes(poly: np.ndarray) -> np.ndarray:
    edges = np.roll(poly, -1, axis=0) - poly
    normals = np.column_stack([edges[:, 1], -edges[:, 0]])
    return normals / np.linalg.norm(normals, axis=1, keepdims=True)


def penetration_depth(p: np.ndarray, q: np.ndarray) -> float:
    """Smallest projected overlap over all edge normals of both polygons (<= 0 when separated)."""
    axes = np.vstack([_axes(p), _axes(q)])
    proj_p = p @ axes.T
    proj_q = q @ axes.T
    overlap = np.minimum(proj_p.max(axis=0), proj_q.max(axis=0)) - np.maximum(proj_p.min(axis=0), proj_q.min(axis=0))
    return float(np.min(overlap))


def signed_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Euclidean gap between two convex polygons, or minus the penetration depth when they overlap."""
    depth = penetration_depth(p, q)
    if depth >= 0.0:
        return -depth
    return float(shapely.distance(to_shapely(p), to_shapely(q)))


def point_distance(point: ArrayLike, vertices: np.ndarray) -> float:
    """Distance from a point to a polygon; zero inside."""
    x, y = np.asarray(point, dtype=float)
    return float(to_shapely(vertices).distance(Point(x, y)))


def convex_hull(points: ArrayLike) -> np.ndarray:
    hull = MultiPoint([tuple(p) for p in np.asarray(points, dtype=float)]).convex_hull
    if not isinstance(hull, Polygon):
        raise DegenerateShapeError("points are collinear; their hull has no area")
    return from_shapely(hull)
