"""Planar geometry kernels: angle wrapping, ray casting, distances, polygon tests.

Everything here is pure and numpy-vectorized; these are the hot paths of the
simulator (Lidar beams against segment/circle soups run every control step).
"""
from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi
_EPS = 1e-12


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.fmod(a + math.pi, TWO_PI)
    if r <= 0.0:
        r += TWO_PI
    return r - math.pi


def unit(v: np.ndarray) -> np.ndarray:
    """v / |v|, or the zero vector when |v| is negligible."""
    n = math.hypot(v[0], v[1])
    if n < _EPS:
        return np.zeros(2)
    return v / n


def polygon_area(verts: np.ndarray) -> float:
    """Signed shoelace area (positive for counter-clockwise order)."""
    x = verts[:, 0]
    y = verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _orient(p, q, r):
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Proper or touching intersection of segments p1p2 and q1q2."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True

    def on_seg(a, b, c):
        return (
            min(a[0], b[0]) - _EPS <= c[0] <= max(a[0], b[0]) + _EPS
            and min(a[1], b[1]) - _EPS <= c[1] <= max(a[1], b[1]) + _EPS
        )

    if abs(d1) < _EPS and on_seg(q1, q2, p1):
        return True
    if abs(d2) < _EPS and on_seg(q1, q2, p2):
        return True
    if abs(d3) < _EPS and on_seg(p1, p2, q1):
        return True
    if abs(d4) < _EPS and on_seg(p1, p2, q2):
        return True
    return False


def polygon_is_simple(verts: np.ndarray) -> bool:
    """True when no pair of non-adjacent edges intersects."""
    n = len(verts)
    for i in range(n):
        a1 = verts[i]
        a2 = verts[(i + 1) % n]
        for j in range(i + 1, n):
            # skip shared-vertex neighbours (and the wrap pair 0 / n-1)
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if segments_intersect(a1, a2, verts[j], verts[(j + 1) % n]):
                return False
    return True


def point_in_polygon(p: np.ndarray, verts: np.ndarray) -> bool:
    """Even-odd crossing test."""
    x, y = float(p[0]), float(p[1])
    inside = False
    n = len(verts)
    x1, y1 = verts[-1]
    for i in range(n):
        x2, y2 = verts[i]
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xi:
                inside = not inside
        x1, y1 = x2, y2
    return inside


def points_segments_min_distance(points: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Min distance from each of N points to any of E segments, (N,)."""
    if len(segs) == 0:
        return np.full(len(points), np.inf)
    a = segs[None, :, 0:2]  # (1,E,2)
    ab = segs[None, :, 2:4] - a
    ap = points[:, None, :] - a  # (N,E,2)
    denom = np.einsum("nej,nej->ne", ab, ab)
    t = np.einsum("nej,nej->ne", ap, ab) / np.where(denom < _EPS, 1.0, denom)
    t = np.clip(t, 0.0, 1.0)
    d = ap - t[:, :, None] * ab
    return np.sqrt(np.einsum("nej,nej->ne", d, d)).min(axis=1)


def points_in_polygons(points: np.ndarray, edges: np.ndarray, edge_poly: np.ndarray, n_polys: int) -> np.ndarray:
    """Even-odd test for N points against polygons given as a flat edge soup.

    edges is (E, 4); edge_poly maps each edge to its polygon index. Returns
    (N,) bool: point inside at least one polygon.
    """
    if n_polys == 0 or len(edges) == 0:
        return np.zeros(len(points), dtype=bool)
    x = points[:, 0:1]  # (N,1)
    y = points[:, 1:2]
    x1, y1, x2, y2 = edges[:, 0], edges[:, 1], edges[:, 2], edges[:, 3]
    straddles = (y1[None, :] > y) != (y2[None, :] > y)  # (N,E)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = x1[None, :] + (y - y1[None, :]) * (x2 - x1)[None, :] / (y2 - y1)[None, :]
    crosses = straddles & (x < xi)
    counts = np.zeros((len(points), n_polys), dtype=int)
    np.add.at(counts.T, edge_poly, crosses.T)
    return (counts % 2 == 1).any(axis=1)


def point_segments_distance(p: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Distances from point p to each segment in segs, an (E, 4) array of
    (x1, y1, x2, y2) rows."""
    a = segs[:, 0:2]
    b = segs[:, 2:4]
    ab = b - a
    ap = p[None, :] - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.einsum("ij,ij->i", ap, ab) / np.where(denom < _EPS, 1.0, denom)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * ab
    d = p[None, :] - closest
    return np.hypot(d[:, 0], d[:, 1])


def nearest_point_on_segments(p: np.ndarray, segs: np.ndarray) -> tuple[np.ndarray, float]:
    """Closest point among all segments and its distance to p."""
    a = segs[:, 0:2]
    b = segs[:, 2:4]
    ab = b - a
    ap = p[None, :] - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.einsum("ij,ij->i", ap, ab) / np.where(denom < _EPS, 1.0, denom)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * ab
    d = p[None, :] - closest
    dist = np.hypot(d[:, 0], d[:, 1])
    i = int(np.argmin(dist))
    return closest[i], float(dist[i])


def rays_vs_segments(origin: np.ndarray, dirs: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """First-hit parameter t for N rays against E segments.

    dirs is (N, 2) unit directions, segs is (E, 4). Returns (N,) distances,
    inf where a ray misses everything.
    """
    if len(segs) == 0:
        return np.full(len(dirs), np.inf)
    a = segs[:, 0:2]  # (E,2)
    e = segs[:, 2:4] - a  # (E,2)
    rel = a - origin[None, :]  # (E,2)
    # denom[i,j] = dirs[i] x e[j]
    denom = dirs[:, 0:1] * e[None, :, 1] - dirs[:, 1:2] * e[None, :, 0]  # (N,E)
    cross_rel_e = rel[:, 0] * e[:, 1] - rel[:, 1] * e[:, 0]  # (E,)
    cross_rel_d = rel[None, :, 0] * dirs[:, 1:2] - rel[None, :, 1] * dirs[:, 0:1]  # (N,E)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross_rel_e[None, :] / denom
        s = cross_rel_d / denom
    ok = (np.abs(denom) > _EPS) & (t >= 0.0) & (s >= 0.0) & (s <= 1.0)
    t = np.where(ok, t, np.inf)
    return t.min(axis=1)


def rays_vs_circles(
    origin: np.ndarray, dirs: np.ndarray, centers: np.ndarray, radii: np.ndarray
) -> np.ndarray:
    """First-hit parameter t for N rays against M circles. Returns (N,) distances."""
    if len(centers) == 0:
        return np.full(len(dirs), np.inf)
    rel = centers - origin[None, :]  # (M,2)
    b = dirs @ rel.T  # (N,M) = d . (c-o)
    c0 = np.einsum("mj,mj->m", rel, rel) - radii**2
    disc = b * b - c0[None, :]
    with np.errstate(invalid="ignore"):
        sq = np.sqrt(np.where(disc >= 0.0, disc, np.nan))
    t1 = b - sq
    t2 = b + sq
    t = np.where(t1 >= 0.0, t1, np.where(t2 >= 0.0, t2, np.inf))
    t = np.where(np.isnan(t), np.inf, t)
    return t.min(axis=1)
