"""
Exact 2D/3D geometric kernels.

Points are plain ``(x, y)`` / ``(x, y, h)`` sequences or numpy arrays.
Polygons carry a counter-clockwise outer ring and clockwise holes, stored
as ``(n, 2)`` float arrays without a repeated closing vertex.

Boolean operations (union, intersection, difference) delegate to shapely;
everything else is implemented here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import shapely
from numpy.typing import ArrayLike, NDArray

from .exceptions import DegenerateInput, OriginOccluded

EPS_GEOM = 1e-9


class Location(str, enum.Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


def _ring(points: ArrayLike) -> NDArray[np.float64]:
    ring = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    if not np.all(np.isfinite(ring)):
        raise ValueError("polygon coordinates must be finite")
    return ring


def ring_signed_area(ring: ArrayLike) -> float:
    """Shoelace signed area; positive for counter-clockwise rings."""
    r = np.asarray(ring, dtype=float)
    r = r - r[0]  # translation invariant; avoids cancellation far from the origin
    x, y = r[:, 0], r[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


class Polygon:
    """Simple polygon with optional holes.

    Ring orientation is normalised on construction: the outer ring is
    made counter-clockwise and every hole clockwise.
    """

    __slots__ = ("outer", "holes")

    def __init__(self, outer: ArrayLike, holes: Iterable[ArrayLike] = ()):
        outer = _ring(outer)
        if len(outer) < 3:
            raise ValueError("polygon ring needs at least 3 vertices")
        if ring_signed_area(outer) < 0:
            outer = outer[::-1]
        rings = []
        for h in holes:
            h = _ring(h)
            if len(h) < 3:
                raise ValueError("polygon ring needs at least 3 vertices")
            if ring_signed_area(h) > 0:
                h = h[::-1]
            rings.append(np.ascontiguousarray(h))
        self.outer = np.ascontiguousarray(outer)
        self.holes = rings

    def __repr__(self):
        return f"Polygon(n={len(self.outer)}, holes={len(self.holes)}, area={self.area:.6g})"

    def __eq__(self, other):
        if not isinstance(other, Polygon) or len(self.holes) != len(other.holes):
            return NotImplemented if not isinstance(other, Polygon) else False
        return np.array_equal(self.outer, other.outer) and all(
            np.array_equal(a, b) for a, b in zip(self.holes, other.holes)
        )

    __hash__ = None

    @property
    def rings(self) -> list[NDArray[np.float64]]:
        return [self.outer, *self.holes]

    @property
    def area(self) -> float:
        return polygon_area(self)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (
            float(self.outer[:, 0].min()),
            float(self.outer[:, 1].min()),
            float(self.outer[:, 0].max()),
            float(self.outer[:, 1].max()),
        )

    def edges(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Start and end points of every ring edge, shape ``(e, 2)`` each."""
        starts = np.concatenate(self.rings)
        ends = np.concatenate([np.roll(r, -1, axis=0) for r in self.rings])
        return starts, ends

    def to_shapely(self) -> shapely.Polygon:
        return shapely.Polygon(self.outer, [h for h in self.holes])

    @classmethod
    def from_shapely(cls, geom) -> list["Polygon"]:
        """Convert a shapely (Multi)Polygon or collection into polygons."""
        out = []
        if geom is None or geom.is_empty:
            return out
        if isinstance(geom, shapely.Polygon):
            parts = [geom]
        elif hasattr(geom, "geoms"):
            parts = [g for g in geom.geoms if isinstance(g, shapely.Polygon)]
        else:
            return out
        for g in parts:
            if g.is_empty or g.area <= 0.0:
                continue
            holes = [_clean_ring(_ring(r.coords)) for r in g.interiors]
            out.append(cls(_clean_ring(_ring(g.exterior.coords)), holes))
        return out


@dataclass(frozen=True)
class Cuboid:
    """Building block: rectangular footprint of ``length`` x ``width`` rotated
    by ``yaw`` around its centre, extruded from the ground to ``height``."""

    cx: float
    cy: float
    length: float
    width: float
    height: float
    yaw: float = 0.0

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0 and self.height > 0):
            raise ValueError("cuboid length, width and height must be positive")

    def footprint(self) -> NDArray[np.float64]:
        """Counter-clockwise footprint corners, shape ``(4, 2)``."""
        hx, hy = self.length / 2.0, self.width / 2.0
        local = np.array([[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]])
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + (self.cx, self.cy)

    def vertices(self) -> NDArray[np.float64]:
        """All 8 corners as ``(x, y, h)``; the first four are on the roof."""
        fp = self.footprint()
        top = np.column_stack([fp, np.full(4, self.height)])
        bottom = np.column_stack([fp, np.zeros(4)])
        return np.vstack([top, bottom])

    def as_row(self) -> tuple[float, ...]:
        return (self.cx, self.cy, self.length, self.width, self.height, self.yaw)


def cuboid_array(cuboids: Sequence[Cuboid]) -> NDArray[np.float64]:
    """Stack cuboids into an ``(m, 6)`` array of (cx, cy, len, wid, height, yaw)."""
    if len(cuboids) == 0:
        return np.empty((0, 6))
    return np.array([c.as_row() for c in cuboids], dtype=float)


# --------------------------------------------------------------------------
# hulls and areas


def convex_hull(points: ArrayLike) -> Polygon:
    """Counter-clockwise convex hull (Andrew's monotone chain).

    Collinear points on hull edges are dropped, so the result's vertices
    are a subset of the input.
    """
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        raise DegenerateInput("convex hull needs at least 3 distinct points")
    # np.unique sorts lexicographically by (x, y)
    lst = [tuple(p) for p in pts]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in lst:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(lst):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateInput("all points are collinear")
    return Polygon(hull)


def polygon_area(p: Polygon) -> float:
    """Area of the outer ring minus the holes (Gauss's shoelace formula)."""
    area = abs(ring_signed_area(p.outer))
    for h in p.holes:
        area -= abs(ring_signed_area(h))
    return max(area, 0.0)


def circle_polygon(center: ArrayLike, radius: float, n_seg: int = 64) -> Polygon:
    """Regular ``n_seg``-gon inscribed in the circle."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n_seg < 3:
        raise ValueError("n_seg must be at least 3")
    t = 2.0 * np.pi * np.arange(n_seg) / n_seg
    cx, cy = float(center[0]), float(center[1])
    return Polygon(np.column_stack([cx + radius * np.cos(t), cy + radius * np.sin(t)]))


def inscribed_area(radius: float, n_seg: int) -> float:
    return 0.5 * n_seg * radius * radius * math.sin(2.0 * math.pi / n_seg)


# --------------------------------------------------------------------------
# booleans (shapely-backed)


def polygon_union(polys: Sequence[Polygon]) -> list[Polygon]:
    """Union of polygons as a list of pairwise-disjoint polygons."""
    if len(polys) == 0:
        return []
    merged = shapely.union_all([p.to_shapely() for p in polys])
    return Polygon.from_shapely(merged)


def polygon_intersection(a: Polygon, b: Polygon) -> list[Polygon]:
    return Polygon.from_shapely(shapely.intersection(a.to_shapely(), b.to_shapely()))


def polygon_difference(a: Polygon, b: Sequence[Polygon]) -> list[Polygon]:
    if len(b) == 0:
        return [a]
    cut = shapely.union_all([p.to_shapely() for p in b])
    return Polygon.from_shapely(shapely.difference(a.to_shapely(), cut))


# --------------------------------------------------------------------------
# distances and point location


def point_segment_distance(q: ArrayLike, a: ArrayLike, b: ArrayLike) -> float:
    """Euclidean distance from ``q`` to the closed segment ``a``-``b``.

    Uses vector projection of ``q - a`` onto ``b - a``, clamped to the
    segment.
    """
    qx, qy = float(q[0]), float(q[1])
    ax, ay = float(a[0]), float(a[1])
    dx, dy = float(b[0]) - ax, float(b[1]) - ay
    ll = dx * dx + dy * dy
    t = 0.0 if ll == 0.0 else ((qx - ax) * dx + (qy - ay) * dy) / ll
    t = min(1.0, max(0.0, t))
    return math.hypot(qx - (ax + t * dx), qy - (ay + t * dy))


def points_segments_distance(
    q: ArrayLike, starts: ArrayLike, ends: ArrayLike
) -> NDArray[np.float64]:
    """Pairwise distances, shape ``(n_points, n_segments)``."""
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    a = np.asarray(starts, dtype=float).reshape(-1, 2)
    d = np.asarray(ends, dtype=float).reshape(-1, 2) - a
    ll = np.einsum("ij,ij->i", d, d)
    rel = q[:, None, :] - a[None, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.einsum("nej,ej->ne", rel, d) / ll
    t = np.clip(np.nan_to_num(t, nan=0.0), 0.0, 1.0)
    diff = rel - t[..., None] * d[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def _even_odd(q: NDArray[np.float64], starts, ends) -> NDArray[np.bool_]:
    px, py = q[:, 0][:, None], q[:, 1][:, None]
    ax, ay = starts[:, 0], starts[:, 1]
    bx, by = ends[:, 0], ends[:, 1]
    straddle = (ay > py) != (by > py)
    with np.errstate(invalid="ignore", divide="ignore"):
        xint = ax + (py - ay) * (bx - ax) / (by - ay)
    hits = straddle & (px < xint)
    return (np.count_nonzero(hits, axis=1) % 2) == 1


def locate_points(
    q: ArrayLike, starts: ArrayLike, ends: ArrayLike, eps: float = EPS_GEOM, chunk: int = 4096
) -> NDArray[np.int8]:
    """Even-odd classification against a set of ring edges.

    Returns an int8 array: 1 inside, 0 boundary (within ``eps``), -1 outside.
    The edges may come from several disjoint polygons with holes.
    """
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    starts = np.asarray(starts, dtype=float).reshape(-1, 2)
    ends = np.asarray(ends, dtype=float).reshape(-1, 2)
    out = np.full(len(q), -1, dtype=np.int8)
    if len(starts) == 0:
        return out
    ex0, ex1 = np.minimum(starts[:, 0], ends[:, 0]), np.maximum(starts[:, 0], ends[:, 0])
    ey0, ey1 = np.minimum(starts[:, 1], ends[:, 1]), np.maximum(starts[:, 1], ends[:, 1])
    for lo in range(0, len(q), chunk):
        sl = slice(lo, lo + chunk)
        qs = q[sl]
        (x0, y0), (x1, y1) = qs.min(axis=0), qs.max(axis=0)
        # the +x ray only meets edges spanning the chunk's y range to its right
        ray = (ey1 >= y0) & (ey0 <= y1) & (ex1 >= x0)
        inside = _even_odd(qs, starts[ray], ends[ray])
        res = np.where(inside, 1, -1).astype(np.int8)
        box = (ex1 >= x0 - eps) & (ex0 <= x1 + eps) & (ey1 >= y0 - eps) & (ey0 <= y1 + eps)
        if box.any():
            res[points_segments_distance(qs, starts[box], ends[box]).min(axis=1) <= eps] = 0
        out[sl] = res
    return out


def point_in_polygon(q: ArrayLike, p: Polygon, eps: float = EPS_GEOM) -> Location:
    starts, ends = p.edges()
    code = int(locate_points(q, starts, ends, eps)[0])
    return {1: Location.INSIDE, 0: Location.BOUNDARY, -1: Location.OUTSIDE}[code]


# --------------------------------------------------------------------------
# 3D occlusion


def segment_block_matrix(
    a: ArrayLike, b: ArrayLike, boxes: ArrayLike
) -> NDArray[np.bool_]:
    """Which segments pass through which cuboid interiors.

    ``a`` and ``b`` are ``(n, 3)`` (or broadcastable ``(3,)``) endpoints and
    ``boxes`` an ``(m, 6)`` array from :func:`cuboid_array`. Element
    ``[i, j]`` is true iff the open segment ``a[i]``-``b[i]`` meets the open
    interior of box ``j`` (slab method in the box frame).
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 6)
    n, m = len(a), len(boxes)
    if n == 0 or m == 0:
        return np.zeros((n, m), dtype=bool)

    cx, cy, ln, wd, ht, yaw = boxes.T
    c, s = np.cos(yaw), np.sin(yaw)
    # rotate endpoints into each box frame: (n, m)
    ax = a[:, 0:1] - cx
    ay = a[:, 1:2] - cy
    bx = b[:, 0:1] - cx
    by = b[:, 1:2] - cy
    lax, lay = c * ax + s * ay, -s * ax + c * ay
    lbx, lby = c * bx + s * by, -s * bx + c * by
    az = np.broadcast_to(a[:, 2:3], lax.shape)
    bz = np.broadcast_to(b[:, 2:3], lax.shape)

    tmin = np.zeros((n, m))
    tmax = np.ones((n, m))
    for p0, p1, lo, hi in (
        (lax, lbx, -ln / 2.0, ln / 2.0),
        (lay, lby, -wd / 2.0, wd / 2.0),
        (az, bz, np.zeros(m), ht),
    ):
        d = p1 - p0
        flat = d == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (lo - p0) / d
            t2 = (hi - p0) / d
        t_in = np.where(flat, -np.inf, np.minimum(t1, t2))
        t_out = np.where(flat, np.inf, np.maximum(t1, t2))
        outside = flat & ~((p0 > lo) & (p0 < hi))
        t_in = np.where(outside, np.inf, t_in)
        t_out = np.where(outside, -np.inf, t_out)
        tmin = np.maximum(tmin, t_in)
        tmax = np.minimum(tmax, t_out)
    return tmin < tmax


def segments_blocked(a: ArrayLike, b: ArrayLike, boxes: ArrayLike, chunk: int = 8192) -> NDArray[np.bool_]:
    """True where a segment is blocked by at least one box."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    out = np.zeros(len(a), dtype=bool)
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 6)
    if len(boxes) == 0:
        return out
    for lo in range(0, len(a), chunk):
        sl = slice(lo, lo + chunk)
        out[sl] = segment_block_matrix(a[sl], b[sl], boxes).any(axis=1)
    return out


def segment_blocked_3d(a: ArrayLike, b: ArrayLike, c: Cuboid) -> bool:
    """Does the open segment ``a``-``b`` pass through the cuboid's interior?"""
    return bool(segment_block_matrix(a, b, np.array([c.as_row()]))[0, 0])


# --------------------------------------------------------------------------
# visibility


def _ray_hits(origin, dirs, starts, ends):
    """Distance along each ray to the nearest segment and that segment's index."""
    e = ends - starts
    rel = starts - origin  # (E, 2)
    denom = dirs[:, None, 0] * e[None, :, 1] - dirs[:, None, 1] * e[None, :, 0]
    num_t = rel[None, :, 0] * e[None, :, 1] - rel[None, :, 1] * e[None, :, 0]
    num_s = rel[None, :, 0] * dirs[:, None, 1] - rel[None, :, 1] * dirs[:, None, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = num_t / denom
        s = num_s / denom
    ok = (np.abs(denom) > 1e-300) & (t > 0) & (s >= -1e-12) & (s <= 1 + 1e-12)
    t = np.where(ok, t, np.inf)
    j = np.argmin(t, axis=1)
    return t[np.arange(len(dirs)), j], j


def _free_component(origin, outer: Polygon, obstacles: Sequence[Polygon]) -> Polygon:
    pt = shapely.Point(origin)
    free = shapely.difference(
        outer.to_shapely(), shapely.union_all([o.to_shapely() for o in obstacles])
    )
    for part in Polygon.from_shapely(free):
        if part.to_shapely().covers(pt):
            return part
    raise OriginOccluded("origin is not inside the free region")


def visibility_polygon(
    origin: ArrayLike, outer: Polygon, obstacles: Sequence[Polygon] = (), eps: float = EPS_GEOM
) -> Polygon:
    """Visibility polygon of ``origin`` inside ``outer`` with opaque obstacles.

    Obstacles may overlap each other and cross the outer boundary. The
    free space is first computed as ``outer`` minus the obstacles; then an
    angular sweep over the free space's vertices finds, for every angular
    interval between consecutive vertex directions, the nearest edge, which
    is constant over the interval because free-space edges never cross.
    """
    o = np.asarray(origin, dtype=float)[:2]
    for obs in obstacles:
        if point_in_polygon(o, obs, eps) is not Location.OUTSIDE:
            raise OriginOccluded("origin lies inside an obstacle")
    if point_in_polygon(o, outer, eps) is not Location.INSIDE:
        raise OriginOccluded("origin is not strictly inside the outer polygon")

    region = _free_component(o, outer, obstacles) if obstacles else outer
    starts, ends = region.edges()

    verts = np.concatenate(region.rings)
    ang = np.sort(np.arctan2(verts[:, 1] - o[1], verts[:, 0] - o[0]))
    keep = np.concatenate([[True], np.diff(ang) > 1e-13])
    ang = ang[keep]
    if ang[-1] - ang[0] > 2.0 * np.pi - 1e-13:
        ang = ang[:-1]
    lo = ang
    hi = np.append(ang[1:], ang[0] + 2.0 * np.pi)
    mid = 0.5 * (lo + hi)

    dirs = np.column_stack([np.cos(mid), np.sin(mid)])
    dist, seg = _ray_hits(o, dirs, starts, ends)
    if not np.all(np.isfinite(dist)):
        raise OriginOccluded("a sweep ray escaped the region; origin is not enclosed")

    # clip the nearest edge's supporting line to each interval's bounding rays
    a = starts[seg] - o
    e = ends[seg] - starts[seg]
    num = a[:, 0] * e[:, 1] - a[:, 1] * e[:, 0]

    def cut(theta):
        d = np.column_stack([np.cos(theta), np.sin(theta)])
        den = d[:, 0] * e[:, 1] - d[:, 1] * e[:, 0]
        return o + d * (num / den)[:, None]

    p_lo, p_hi = cut(lo), cut(hi)
    pts = np.empty((2 * len(lo), 2))
    pts[0::2] = p_lo
    pts[1::2] = p_hi
    return Polygon(_clean_ring(pts))


def _clean_ring(pts: NDArray[np.float64], tol: float = 1e-12) -> NDArray[np.float64]:
    """Drop repeated and collinear vertices from a closed ring."""
    pts = np.asarray(pts, dtype=float)
    scale = max(1.0, float(np.abs(pts).max())) if len(pts) else 1.0
    changed = True
    while changed and len(pts) > 3:
        changed = False
        nxt = np.roll(pts, -1, axis=0)
        dup = np.hypot(*(nxt - pts).T) <= tol * scale
        if dup.any():
            pts = pts[~dup]
            changed = True
            continue
        prv = np.roll(pts, 1, axis=0)
        nxt = np.roll(pts, -1, axis=0)
        cr = (pts[:, 0] - prv[:, 0]) * (nxt[:, 1] - prv[:, 1]) - (pts[:, 1] - prv[:, 1]) * (
            nxt[:, 0] - prv[:, 0]
        )
        span = np.hypot(*(nxt - prv).T)
        flat = np.abs(cr) <= tol * scale * np.maximum(span, tol)
        if flat.any():
            # remove one at a time from each run so rings never collapse wholesale
            idx = np.flatnonzero(flat)
            drop = idx[np.concatenate([[True], np.diff(idx) > 1])]
            mask = np.ones(len(pts), dtype=bool)
            mask[drop] = False
            if mask.sum() >= 3:
                pts = pts[mask]
                changed = True
    return pts


# --------------------------------------------------------------------------
# triangulation


def _bridge_holes(outer: list, holes: list[list]) -> list:
    """Splice holes into the outer ring with zero-width bridges."""
    ring = list(outer)
    order = sorted(holes, key=lambda h: max(p[0] for p in h), reverse=True)
    for hole in order:
        mi = max(range(len(hole)), key=lambda i: (hole[i][0], -hole[i][1]))
        mx, my = hole[mi]
        best_x, best_i = math.inf, -1
        n = len(ring)
        for i in range(n):
            ax, ay = ring[i]
            bx, by = ring[(i + 1) % n]
            if (ay <= my <= by or by <= my <= ay) and ay != by:
                x = ax + (my - ay) * (bx - ax) / (by - ay)
                if mx <= x < best_x:
                    best_x = x
                    if ay == my and x == ax:
                        best_i = i
                    elif by == my and x == bx:
                        best_i = (i + 1) % n
                    else:
                        best_i = i if ax > bx else (i + 1) % n
        if best_i < 0:
            raise DegenerateInput("could not bridge hole to outer ring")
        px, py = ring[best_i]
        # a reflex vertex inside triangle (M, I, P) would block the bridge
        ix = best_x
        tri = ((mx, my), (ix, my), (px, py))
        cand, best_key = best_i, None
        for i in range(len(ring)):
            qx, qy = ring[i]
            if (qx, qy) == (px, py) or qx < mx:
                continue
            if _in_triangle_closed(tri, (qx, qy)):
                prv, nxt = ring[i - 1], ring[(i + 1) % len(ring)]
                if _cross(prv, (qx, qy), nxt) < 0:
                    key = (abs(qy - my) / max(qx - mx, 1e-300), math.hypot(qx - mx, qy - my))
                    if best_key is None or key < best_key:
                        best_key, cand = key, i
        h = hole[mi:] + hole[:mi]
        ring = ring[: cand + 1] + h + [h[0], ring[cand]] + ring[cand + 1 :]
    return ring


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _in_triangle_closed(tri, p):
    a, b, c = tri
    d1, d2, d3 = _cross(a, b, p), _cross(b, c, p), _cross(c, a, p)
    neg = d1 < 0 or d2 < 0 or d3 < 0
    pos = d1 > 0 or d2 > 0 or d3 > 0
    return not (neg and pos)


def triangulate(p: Polygon) -> NDArray[np.float64]:
    """Ear-clipping triangulation after bridging holes into the outer ring.

    Returns an array of shape ``(t, 3, 2)``; every triangle is
    counter-clockwise.
    """
    if polygon_area(p) <= 0.0:
        raise DegenerateInput("cannot triangulate a zero-area polygon")
    outer = [tuple(v) for v in p.outer.tolist()]
    holes = [[tuple(v) for v in h.tolist()] for h in p.holes]
    ring = _bridge_holes(outer, holes) if holes else outer
    pts = np.array(ring, dtype=float)
    n = len(pts)
    scale = max(1.0, float(np.abs(pts).max()))
    tol = 1e-14 * scale * scale

    nxt = list(range(1, n)) + [0]
    prv = [n - 1] + list(range(n - 1))
    alive = np.ones(n, dtype=bool)
    tris = []
    remaining = n
    i = 0
    stall = 0

    def area2(a, b, c):
        return (pts[b, 0] - pts[a, 0]) * (pts[c, 1] - pts[a, 1]) - (pts[b, 1] - pts[a, 1]) * (
            pts[c, 0] - pts[a, 0]
        )

    def is_ear(a, b, c):
        idx = np.flatnonzero(alive)
        q = pts[idx]
        A, B, C = pts[a], pts[b], pts[c]
        same = (
            np.all(q == A, axis=1) | np.all(q == B, axis=1) | np.all(q == C, axis=1)
        )
        d1 = (B[0] - A[0]) * (q[:, 1] - A[1]) - (B[1] - A[1]) * (q[:, 0] - A[0])
        d2 = (C[0] - B[0]) * (q[:, 1] - B[1]) - (C[1] - B[1]) * (q[:, 0] - B[0])
        d3 = (A[0] - C[0]) * (q[:, 1] - C[1]) - (A[1] - C[1]) * (q[:, 0] - C[0])
        inside = (d1 >= -tol) & (d2 >= -tol) & (d3 >= -tol)
        return not np.any(inside & ~same)

    def remove(b):
        nonlocal remaining
        a, c = prv[b], nxt[b]
        nxt[a], prv[c] = c, a
        alive[b] = False
        remaining -= 1
        return c

    while remaining > 3:
        a, b, c = prv[i], i, nxt[i]
        cr = area2(a, b, c)
        if abs(cr) <= tol:
            i = remove(b)
            stall = 0
            continue
        if cr > 0 and is_ear(a, b, c):
            tris.append((a, b, c))
            i = remove(b)
            stall = 0
            continue
        i = c
        stall += 1
        if stall > remaining:
            # numerical dead end: clip the most convex vertex
            cand = max(
                np.flatnonzero(alive), key=lambda k: area2(prv[k], k, nxt[k])
            )
            tris.append((prv[cand], cand, nxt[cand]))
            i = remove(cand)
            stall = 0
    if remaining == 3:
        b = i
        a, c = prv[b], nxt[b]
        if area2(a, b, c) > tol:
            tris.append((a, b, c))
    if not tris:
        raise DegenerateInput("triangulation produced no triangles")
    return pts[np.array(tris)]


def triangle_areas(tris: NDArray[np.float64]) -> NDArray[np.float64]:
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
