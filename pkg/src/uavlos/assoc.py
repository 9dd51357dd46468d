"""
User-UAV association policies.

* ``embb_area``: maximise the expected slot throughput, i.e. the
  area-weighted throughput over the part of the user's visibility region
  that lies inside the UAV's coverage disk, divided by the full mobility
  disk area.
* ``urllc_radius``: maximise the URLLC LoS radius among UAVs whose
  coverage disk contains the whole LoS disk.
* ``max_throughput``: baseline; the in-range LoS UAV with the highest
  instantaneous throughput at the slot-start position.

Policies score with the mean channel gain ``E[|h|^2] = 1`` so that
decisions are reproducible. Ties go to the smallest UAV id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .base import check_queries, check_scene
from .channel import ChannelParams, link_throughput
from .geometry import (
    circle_polygon,
    cuboid_array,
    polygon_intersection,
    segments_blocked,
    triangle_areas,
    triangulate,
)
from .shadowcast import ShadowMap, build_shadow_map, urllc_radius_spa, visibility_region
from .scene import Scene, Uav, User

Policy = Literal["embb_area", "urllc_radius", "max_throughput"]


@dataclass(frozen=True)
class CoverageDisk:
    uav_id: int
    center: tuple[float, float]
    radius: float

    @classmethod
    def of(cls, uav: Uav) -> "CoverageDisk | None":
        r = uav.coverage_radius
        return cls(uav.id, (uav.x, uav.y), r) if r > 0 else None

    def distance(self, g) -> float:
        return math.hypot(g[0] - self.center[0], g[1] - self.center[1])

    def contains(self, g) -> bool:
        return self.distance(g) <= self.radius


@dataclass(frozen=True)
class AssociationResult:
    user_id: int
    uav_id: int | None
    policy: Policy
    score: float
    per_uav_scores: tuple[tuple[int, float], ...]


def _pick(scores: Sequence[tuple[int, float]], feasible: Sequence[bool]) -> tuple[int | None, float]:
    best_id, best = None, -math.inf
    for (uid, s), ok in zip(scores, feasible):
        if not ok:
            continue
        if s > best or (s == best and best_id is not None and uid < best_id):
            best_id, best = uid, s
    return (best_id, best) if best_id is not None else (None, 0.0)


def expected_throughput_embb(
    uav: Uav,
    g,
    r_g: float,
    smap: ShadowMap,
    channel: ChannelParams,
    n_seg: int = 64,
    cover_seg: int = 256,
) -> float:
    """Expected slot throughput (bit/s) for a user at ``g`` served by ``uav``.

    The visibility region inside the mobility disk is intersected with the
    polygonal coverage disk, triangulated, and each triangle contributes
    the throughput at its centroid times its area. The sum is divided by
    ``pi r_g^2``, so shadowed or out-of-coverage parts count as zero rate.
    """
    disk = CoverageDisk.of(uav)
    if disk is None or not disk.contains(g):
        return 0.0
    if r_g <= 0:
        if smap.contains(np.asarray(g, dtype=float)[None, :2])[0]:
            return 0.0
        return float(link_throughput(uav, [g], channel)[0])
    vis = visibility_region(smap, g, r_g, n_seg)
    if vis is None:
        return 0.0
    # inscribed coverage polygon's inradius
    inner = disk.radius * math.cos(math.pi / cover_seg)
    if disk.distance(g) + r_g <= inner:
        pieces = [vis]
    else:
        pieces = polygon_intersection(circle_polygon(disk.center, disk.radius, cover_seg), vis)
    total = 0.0
    for piece in pieces:
        tris = triangulate(piece)
        areas = triangle_areas(tris)
        centroids = tris.mean(axis=1)
        total += float(np.dot(link_throughput(uav, centroids, channel), areas))
    return total / (math.pi * r_g * r_g)


def has_los(scene: Scene, uav: Uav, g, boxes=None) -> bool:
    if boxes is None:
        boxes = cuboid_array(scene.buildings)
    a = np.array([[float(g[0]), float(g[1]), 0.0]])
    return not bool(segments_blocked(a, np.array(uav.pos, dtype=float), boxes)[0])


def _user_radius(scene: Scene, user: User) -> float:
    return user.speed * scene.dt


def associate_embb(scene: Scene, user: User, maps: Sequence[ShadowMap], n_seg: int = 64) -> AssociationResult:
    g, r_g = user.pos, _user_radius(scene, user)
    scores = []
    for uav, smap in zip(scene.uavs, maps):
        scores.append((uav.id, expected_throughput_embb(uav, g, r_g, smap, scene.channel, n_seg)))
    uid, best = _pick(scores, [s > 0 for _, s in scores])
    return AssociationResult(user.id, uid, "embb_area", best, tuple(scores))


def urllc_candidates(scene: Scene, user: User, maps: Sequence[ShadowMap]):
    """Per-UAV ``(radius, feasible)``: feasible iff the user has LoS at its
    position and the LoS disk lies inside the coverage disk."""
    g, r_g = user.pos, _user_radius(scene, user)
    out = []
    for uav, smap in zip(scene.uavs, maps):
        disk = CoverageDisk.of(uav)
        if disk is None:
            out.append((0.0, False))
            continue
        lit = not smap.contains(np.asarray(g, dtype=float)[None, :])[0]
        r = urllc_radius_spa(smap, g, r_g) if lit else 0.0
        out.append((r, lit and r + disk.distance(g) <= disk.radius))
    return out


def associate_urllc(scene: Scene, user: User, maps: Sequence[ShadowMap]) -> AssociationResult:
    cands = urllc_candidates(scene, user, maps)
    scores = tuple((u.id, r) for u, (r, _) in zip(scene.uavs, cands))
    uid, best = _pick(scores, [ok for _, ok in cands])
    return AssociationResult(user.id, uid, "urllc_radius", best, scores)


def associate_max_throughput(scene: Scene, user: User, boxes=None) -> AssociationResult:
    if boxes is None:
        boxes = cuboid_array(scene.buildings)
    g = user.pos
    scores, feasible = [], []
    for uav in scene.uavs:
        disk = CoverageDisk.of(uav)
        ok = disk is not None and disk.contains(g) and has_los(scene, uav, g, boxes)
        t = float(link_throughput(uav, [g], scene.channel)[0]) if ok else 0.0
        scores.append((uav.id, t))
        feasible.append(ok)
    uid, best = _pick(scores, feasible)
    return AssociationResult(user.id, uid, "max_throughput", best, tuple(scores))


class _Associator(BaseEstimator):
    """``fit(scene)`` then ``predict(X)`` with rows ``[x, y, r_g]``; returns
    the chosen UAV id per row, ``-1`` when no UAV qualifies."""

    policy: Policy

    def fit(self, scene, y=None):
        scene = check_scene(scene)
        self.scene_ = scene
        self.boxes_ = cuboid_array(scene.buildings)
        self._fit(scene)
        return self

    def _fit(self, scene):
        pass

    def _user(self, row, i) -> User:
        x, y, r_g = row
        speed = r_g / self.scene_.dt
        return User(id=i, x=float(x), y=float(y), speed=float(speed))

    def associate(self, user: User) -> AssociationResult:
        raise NotImplementedError

    def predict(self, X):
        check_is_fitted(self, "scene_")
        X = check_queries(X)
        out = np.full(len(X), -1, dtype=int)
        for i, row in enumerate(X):
            res = self.associate(self._user(row, i))
            if res.uav_id is not None:
                out[i] = res.uav_id
        return out

    def decision_function(self, X):
        """Per-UAV scores, shape ``(n_queries, n_uavs)``."""
        check_is_fitted(self, "scene_")
        X = check_queries(X)
        return np.array(
            [[s for _, s in self.associate(self._user(row, i)).per_uav_scores] for i, row in enumerate(X)]
        ).reshape(len(X), len(self.scene_.uavs))


class EmbbAssociator(_Associator):
    policy = "embb_area"

    def __init__(self, n_seg=64, margin=None):
        self.n_seg = n_seg
        self.margin = margin

    def _fit(self, scene):
        self.maps_ = [build_shadow_map(scene, u, self.margin) for u in scene.uavs]

    def associate(self, user):
        return associate_embb(self.scene_, user, self.maps_, self.n_seg)


class UrllcAssociator(_Associator):
    policy = "urllc_radius"

    def __init__(self, margin=None):
        self.margin = margin

    def _fit(self, scene):
        self.maps_ = [build_shadow_map(scene, u, self.margin) for u in scene.uavs]

    def associate(self, user):
        return associate_urllc(self.scene_, user, self.maps_)


class MaxThroughputAssociator(_Associator):
    policy = "max_throughput"

    def associate(self, user):
        return associate_max_throughput(self.scene_, user, self.boxes_)
