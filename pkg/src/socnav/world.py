"""Static world model: polygonal maps, collision geometry, ray casting.

Maps are axis-aligned bounded rectangles containing polygonal obstacles
(convex polygons or axis-aligned rectangles, stored uniformly as vertex
arrays). The outer boundary behaves like an obstacle: Lidar rays hit it and
a body poking outside the bounds counts as a collision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .geometry import normalize_angle

R_ROBOT = 0.3  # robot body radius, m
R_AGENT = 0.3  # pedestrian body radius, m


class MapError(ValueError):
    """Raised for malformed map geometry."""


@dataclass(frozen=True)
class Body:
    """A circular body: position plus radius, both in meters."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise ValueError("body radius must be positive")


@dataclass
class Pose:
    """Robot configuration: position (m) and heading (rad, wrapped to (-pi, pi])."""

    x: float
    y: float
    heading: float

    def __post_init__(self):
        self.heading = normalize_angle(self.heading)

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def copy(self) -> "Pose":
        return Pose(self.x, self.y, self.heading)


def integrate_unicycle(pose: Pose, linear: float, angular: float, dt: float) -> Pose:
    """One forward-Euler unicycle step: translate along the current heading,
    then rotate."""
    return Pose(
        pose.x + linear * math.cos(pose.heading) * dt,
        pose.y + linear * math.sin(pose.heading) * dt,
        pose.heading + angular * dt,
    )


def _as_polygon(verts) -> np.ndarray:
    arr = np.asarray(verts, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise MapError(f"malformed polygon: need >=3 2D vertices, got shape {arr.shape}")
    if abs(geometry.polygon_area(arr)) < 1e-9:
        raise MapError("malformed polygon: degenerate (zero area)")
    if not geometry.polygon_is_simple(arr):
        raise MapError("malformed polygon: self-intersecting")
    return arr


class WorldMap:
    """Immutable static map. Safe to share across parallel episode workers."""

    def __init__(self, name: str, width: float, height: float, obstacles=(), spawn_region=None):
        if width <= 0 or height <= 0:
            raise MapError("map bounds must be positive")
        self.name = name
        self.width = float(width)
        self.height = float(height)
        self.obstacles: list[np.ndarray] = [_as_polygon(o) for o in obstacles]
        for poly in self.obstacles:
            if (
                poly[:, 0].min() < -1e-9
                or poly[:, 1].min() < -1e-9
                or poly[:, 0].max() > self.width + 1e-9
                or poly[:, 1].max() > self.height + 1e-9
            ):
                raise MapError("obstacle outside map bounds")
        if spawn_region is not None:
            self.spawn_region = _as_polygon(spawn_region)
        else:
            m = R_ROBOT + 0.05
            self.spawn_region = np.array(
                [[m, m], [self.width - m, m], [self.width - m, self.height - m], [m, self.height - m]]
            )
        self._obstacle_edges = self._edge_array(self.obstacles)
        self._edge_poly = np.concatenate(
            [np.full(len(p), i, dtype=int) for i, p in enumerate(self.obstacles)]
        ) if self.obstacles else np.zeros(0, dtype=int)
        self._boundary_edges = np.array(
            [
                [0.0, 0.0, self.width, 0.0],
                [self.width, 0.0, self.width, self.height],
                [self.width, self.height, 0.0, self.height],
                [0.0, self.height, 0.0, 0.0],
            ]
        )
        self.edges = (
            np.vstack([self._obstacle_edges, self._boundary_edges])
            if len(self._obstacle_edges)
            else self._boundary_edges
        )

    @staticmethod
    def _edge_array(polys) -> np.ndarray:
        rows = []
        for p in polys:
            nxt = np.roll(p, -1, axis=0)
            rows.append(np.hstack([p, nxt]))
        return np.vstack(rows) if rows else np.zeros((0, 4))

    def contains(self, p, margin: float = 0.0) -> bool:
        return (
            margin <= p[0] <= self.width - margin and margin <= p[1] <= self.height - margin
        )

    def boundary_distance(self, p) -> float:
        """Distance from an interior point to the nearest boundary wall."""
        return min(p[0], self.width - p[0], p[1], self.height - p[1])


def load_map(tree: dict) -> WorldMap:
    """Build a validated WorldMap from a config mapping.

    Expected keys: ``bounds: [width, height]`` and ``obstacles``, a list where
    each entry is either a polygon vertex list or ``{rect: [x0, y0, x1, y1]}``.
    Optional: ``name``, ``spawn_region`` (polygon vertex list).
    """
    if "builtin" in tree:
        from . import maps

        return maps.builtin(tree["builtin"])
    try:
        w, h = tree["bounds"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MapError("map config needs bounds: [width, height]") from exc
    obstacles = []
    for entry in tree.get("obstacles", []) or []:
        if isinstance(entry, dict) and "rect" in entry:
            x0, y0, x1, y1 = entry["rect"]
            if not (x1 > x0 and y1 > y0):
                raise MapError(f"malformed rect {entry['rect']}")
            obstacles.append([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
        else:
            obstacles.append(entry)
    return WorldMap(
        name=tree.get("name", "map"),
        width=float(w),
        height=float(h),
        obstacles=obstacles,
        spawn_region=tree.get("spawn_region"),
    )


def rect(x0: float, y0: float, x1: float, y1: float) -> list[list[float]]:
    """Axis-aligned rectangle as a 4-vertex polygon (CCW)."""
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def raycast(
    wmap: WorldMap,
    agents,
    origin,
    angle: float,
    max_range: float,
) -> float:
    """Distance from origin along angle to the first obstacle edge, boundary
    wall or agent circle, clamped to max_range."""
    dirs = np.array([[math.cos(angle), math.sin(angle)]])
    return float(raycast_batch(wmap, agents, np.asarray(origin, float), dirs, max_range)[0])


def raycast_batch(wmap, agents, origin: np.ndarray, dirs: np.ndarray, max_range: float) -> np.ndarray:
    """Vectorized raycast for many directions at once; this is the Lidar kernel."""
    t = geometry.rays_vs_segments(origin, dirs, wmap.edges)
    if agents:
        centers = np.array([a.center for a in agents])
        radii = np.array([a.radius for a in agents])
        t = np.minimum(t, geometry.rays_vs_circles(origin, dirs, centers, radii))
    return np.minimum(t, max_range)


def collide_points(wmap: WorldMap, points: np.ndarray, radius: float) -> np.ndarray:
    """Vectorized static-collision test for N disk centers against the map."""
    points = np.asarray(points, dtype=float)
    bad = (
        (points[:, 0] < radius)
        | (points[:, 0] > wmap.width - radius)
        | (points[:, 1] < radius)
        | (points[:, 1] > wmap.height - radius)
    )
    if len(wmap._obstacle_edges):
        todo = ~bad
        if todo.any():
            pts = points[todo]
            near = geometry.points_segments_min_distance(pts, wmap._obstacle_edges) < radius
            inside = geometry.points_in_polygons(
                pts, wmap._obstacle_edges, wmap._edge_poly, len(wmap.obstacles)
            )
            bad[todo] = near | inside
    return bad


def check_collision(body: Body, wmap: WorldMap, agents=()) -> bool:
    """True when the body disk pokes outside the bounds, overlaps any obstacle
    polygon, or overlaps any agent disk."""
    c = body.center
    if bool(collide_points(wmap, c[None, :], body.radius)[0]):
        return True
    for a in agents:
        if np.hypot(*(c - a.center)) < body.radius + a.radius:
            return True
    return False


def clearance(body: Body, wmap: WorldMap, agents=()) -> float:
    """Signed surface distance from the body disk to the nearest obstacle,
    boundary wall or agent disk (negative when penetrating)."""
    c = body.center
    best = wmap.boundary_distance(c)
    if len(wmap._obstacle_edges):
        d = float(geometry.point_segments_distance(c, wmap._obstacle_edges).min())
        for poly in wmap.obstacles:
            if geometry.point_in_polygon(c, poly):
                d = -d
                break
        best = min(best, d)
    for a in agents:
        best = min(best, float(np.hypot(*(c - a.center))) - a.radius)
    return best - body.radius


def sample_free_point(wmap: WorldMap, rng: np.random.Generator, radius: float, max_tries: int = 200):
    """Uniform collision-free point inside the spawn region (rejection sampling)."""
    verts = wmap.spawn_region
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    for _ in range(max_tries):
        p = lo + rng.random(2) * (hi - lo)
        if not geometry.point_in_polygon(p, verts):
            continue
        if not check_collision(Body(p, radius), wmap):
            return p
    raise RuntimeError("could not sample a free point (map too constrained)")
