"""
Exact shadow-polygon LoS backend.

For each UAV, every building's ground shadow is the convex hull of its
eight vertices projected from the UAV onto the ground plane. The union of
all shadows (the shadow map) is exactly the set of ground points whose
link to the UAV is blocked. Queries then reduce to planar problems:

* eMBB LoS area: area of the visibility polygon of the user inside the
  polygonal mobility disk, with shadows as opaque holes.
* URLLC LoS radius: distance from the user to the nearest shadow edge,
  capped at the mobility radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely

from .base import LosBackend
from .exceptions import OriginOccluded, VertexAboveUav
from .geometry import (
    EPS_GEOM,
    Cuboid,
    Polygon,
    circle_polygon,
    convex_hull,
    locate_points,
    points_segments_distance,
    polygon_area,
    visibility_polygon,
)
from .scene import Region, Scene, Uav

# distance to which shadows of buildings at least as tall as the UAV are extruded
_FAR = 1e6


def project_vertex(v, uav) -> tuple[float, float]:
    """Ground projection of vertex ``v = (x, y, h)`` along the ray from ``uav``."""
    x, y, h = (float(c) for c in v[:3])
    xk, yk, hk = (float(c) for c in uav[:3])
    if h >= hk:
        raise VertexAboveUav(f"vertex height {h} is not below the UAV ({hk})")
    if h == 0.0:
        return (x, y)
    return (x - h * (x - xk) / (h - hk), y - h * (y - yk) / (h - hk))


def _box_polygon(r: Region) -> Polygon:
    return Polygon([(r.x_min, r.y_min), (r.x_max, r.y_min), (r.x_max, r.y_max), (r.x_min, r.y_max)])


def building_shadow(b: Cuboid, uav, clip: Region | None = None) -> Polygon | None:
    """Ground shadow of one building as seen from ``uav = (x, y, h)``.

    Buildings at least as tall as the UAV occlude the whole angular sector
    behind their footprint; that sector is extruded to a large distance and
    cut by ``clip``. Returns ``None`` if the shadow misses ``clip``.
    """
    fp = b.footprint()
    xk, yk, hk = (float(c) for c in uav[:3])
    k = np.array([xk, yk])
    rel = fp - k
    dist = np.hypot(rel[:, 0], rel[:, 1])

    if b.height < hk:
        scale = b.height / (hk - b.height)
        stretched = fp + rel * scale
        tall = bool(np.any(dist * scale > _FAR))
    else:
        tall = True

    if tall:
        fp_poly = shapely.Polygon(fp)
        if fp_poly.covers(shapely.Point(xk, yk)):
            if clip is None:
                raise VertexAboveUav("UAV sits inside a building at least as tall as itself")
            return _box_polygon(clip)
        stretched = fp + rel / dist[:, None] * _FAR
    hull = convex_hull(np.vstack([fp, stretched]))
    if clip is None:
        return hull
    x0, y0, x1, y1 = hull.bounds
    if x0 >= clip.x_min and y0 >= clip.y_min and x1 <= clip.x_max and y1 <= clip.y_max:
        return hull
    cut = Polygon.from_shapely(
        shapely.intersection(hull.to_shapely(), shapely.box(clip.x_min, clip.y_min, clip.x_max, clip.y_max))
    )
    return cut[0] if cut else None


@dataclass(frozen=True, eq=False)
class ShadowMap:
    """Disjoint ground shadows of all buildings with respect to one UAV."""

    uav_id: int
    shadows: tuple[Polygon, ...]
    built_from: int
    region_clip: Region
    _starts: np.ndarray = field(repr=False, default=None)
    _ends: np.ndarray = field(repr=False, default=None)
    _owner: np.ndarray = field(repr=False, default=None)
    _bboxes: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        starts, ends, owner = [], [], []
        for i, p in enumerate(self.shadows):
            s, e = p.edges()
            starts.append(s)
            ends.append(e)
            owner.append(np.full(len(s), i))
        object.__setattr__(self, "_starts", np.concatenate(starts) if starts else np.empty((0, 2)))
        object.__setattr__(self, "_ends", np.concatenate(ends) if ends else np.empty((0, 2)))
        object.__setattr__(self, "_owner", np.concatenate(owner) if owner else np.empty(0, dtype=int))
        object.__setattr__(
            self, "_bboxes", np.array([p.bounds for p in self.shadows]).reshape(-1, 4)
        )

    def __len__(self):
        return len(self.shadows)

    @property
    def area(self) -> float:
        return float(sum(polygon_area(p) for p in self.shadows))

    def edges(self, idx=None):
        if idx is None:
            return self._starts, self._ends
        m = np.isin(self._owner, idx)
        return self._starts[m], self._ends[m]

    def near(self, center, radius: float) -> np.ndarray:
        """Indices of shadows whose bounding box meets the square around the disk."""
        if len(self.shadows) == 0:
            return np.empty(0, dtype=int)
        cx, cy = float(center[0]), float(center[1])
        b = self._bboxes
        hit = (
            (b[:, 0] <= cx + radius) & (b[:, 2] >= cx - radius)
            & (b[:, 1] <= cy + radius) & (b[:, 3] >= cy - radius)
        )
        return np.flatnonzero(hit)

    def locate(self, points, eps: float = EPS_GEOM) -> np.ndarray:
        """1 inside a shadow, 0 on a shadow boundary, -1 lit."""
        return locate_points(points, self._starts, self._ends, eps)

    def contains(self, points, eps: float = EPS_GEOM) -> np.ndarray:
        """Shadowed points, counting the boundary band as shadowed."""
        return self.locate(points, eps) >= 0

    def boundary_distance(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(self._starts) == 0:
            return np.full(len(pts), np.inf)
        out = np.empty(len(pts))
        for lo in range(0, len(pts), 2048):
            out[lo:lo + 2048] = points_segments_distance(pts[lo:lo + 2048], self._starts, self._ends).min(axis=1)
        return out


def build_shadow_map(scene: Scene, uav: Uav, margin: float | None = None) -> ShadowMap:
    """Union of all building shadows for ``uav``, clipped to the region
    expanded by ``margin`` (default: the largest mobility radius)."""
    if margin is None:
        margin = scene.mobility.v_max * scene.dt
    clip = scene.region.expanded(margin)
    hulls = []
    for b in scene.buildings:
        s = building_shadow(b, uav.pos, clip)
        if s is not None:
            hulls.append(s.to_shapely())
    if hulls:
        shadows = tuple(Polygon.from_shapely(shapely.union_all(hulls)))
    else:
        shadows = ()
    return ShadowMap(uav.id, shadows, len(scene.buildings), clip)


def _occluded(smap: ShadowMap, g, idx) -> bool:
    if len(idx) == 0:
        return False
    s, e = smap.edges(idx)
    return bool(locate_points(np.asarray(g, dtype=float)[None, :2], s, e)[0] >= 0)


def visibility_region(smap: ShadowMap, g, r_g: float, n_seg: int = 64) -> Polygon | None:
    """Visibility polygon of ``g`` within its polygonal mobility disk, or
    ``None`` when ``g`` is shadowed or ``r_g`` is zero."""
    if r_g <= 0:
        return None
    idx = smap.near(g, r_g)
    if _occluded(smap, g, idx):
        return None
    disk = circle_polygon(g, r_g, n_seg)
    if len(idx) == 0:
        return disk
    try:
        return visibility_polygon(g, disk, [smap.shadows[i] for i in idx])
    except OriginOccluded:
        return None


def embb_area_spa(smap: ShadowMap, g, r_g: float, n_seg: int = 64) -> float:
    """Area of the region reachable from ``g`` along straight lines without
    losing LoS; 0 if ``g`` itself is shadowed."""
    v = visibility_region(smap, g, r_g, n_seg)
    return 0.0 if v is None else polygon_area(v)


def urllc_radius_spa(smap: ShadowMap, g, r_g: float) -> float:
    """Distance from ``g`` to the nearest shadow edge, capped at ``r_g``."""
    if r_g <= 0:
        return 0.0
    idx = smap.near(g, r_g)
    if len(idx) == 0:
        return float(r_g)
    if _occluded(smap, g, idx):
        return 0.0
    s, e = smap.edges(idx)
    d = points_segments_distance(np.asarray(g, dtype=float)[None, :2], s, e).min()
    return float(min(d, r_g))


class ShadowPolygonLos(LosBackend):
    """Exact geometric LoS area/radius from per-UAV shadow maps.

    Parameters
    ----------
    n_seg : int
        Vertices of the polygon approximating the mobility disk.
    margin : float, optional
        Clip margin around the region; defaults to ``v_max * dt``.
    """

    backend_name = "shadow"

    def __init__(self, n_seg=64, margin=None):
        self.n_seg = n_seg
        self.margin = margin

    def _fit(self, scene):
        self.maps_ = [build_shadow_map(scene, u, self.margin) for u in scene.uavs]

    def _area(self, k, x, y, r_g):
        return embb_area_spa(self.maps_[k], (x, y), r_g, self.n_seg)

    def _radius(self, k, x, y, r_g):
        return urllc_radius_spa(self.maps_[k], (x, y), r_g)
