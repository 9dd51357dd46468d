"""Estimator plumbing shared by the three LoS backends."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Literal

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .scene import Scene

Backend = Literal["analytic", "shadow", "grid"]


@dataclass(frozen=True)
class LosReport:
    user_id: int
    uav_id: int
    embb_area: float
    urllc_radius: float
    backend: Backend
    elapsed: float


def check_queries(X) -> np.ndarray:
    """Validate query rows ``[x, y, r_g]`` (user position and mobility radius)."""
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=True)
    if X.shape[1] != 3:
        raise ValueError(f"expected 3 columns [x, y, r_g], got {X.shape[1]}")
    if np.any(X[:, 2] < 0):
        raise ValueError("mobility radius r_g must be non-negative")
    return X


def check_scene(scene) -> Scene:
    if not isinstance(scene, Scene):
        raise TypeError(f"expected a Scene, got {type(scene).__name__}")
    return scene


def user_queries(scene: Scene) -> np.ndarray:
    """Query rows for every user of ``scene``: position and ``speed * dt``."""
    return np.array([[u.x, u.y, u.speed * scene.dt] for u in scene.users], dtype=float).reshape(-1, 3)


class LosBackend(TransformerMixin, BaseEstimator):
    """Common fit/transform surface.

    ``fit(scene)`` prepares per-UAV state; ``transform(X)`` maps query rows
    ``[x, y, r_g]`` to ``2 * n_uavs`` columns: the eMBB LoS area for every
    UAV followed by the URLLC LoS radius for every UAV.
    """

    backend_name: Backend

    def fit(self, scene, y=None):
        scene = check_scene(scene)
        self.scene_ = scene
        self.uav_ids_ = np.array([u.id for u in scene.uavs], dtype=int)
        self.n_uavs_ = len(scene.uavs)
        self._fit(scene)
        return self

    def _fit(self, scene):  # pragma: no cover - overridden
        pass

    def _area(self, k: int, x: float, y: float, r_g: float) -> float:
        raise NotImplementedError

    def _radius(self, k: int, x: float, y: float, r_g: float) -> float:
        raise NotImplementedError

    def embb_area(self, X) -> np.ndarray:
        """eMBB LoS area, shape ``(n_queries, n_uavs)``."""
        check_is_fitted(self, "scene_")
        X = check_queries(X)
        return np.array(
            [[self._area(k, x, y, r) for k in range(self.n_uavs_)] for x, y, r in X]
        ).reshape(len(X), self.n_uavs_)

    def urllc_radius(self, X) -> np.ndarray:
        """URLLC LoS radius, shape ``(n_queries, n_uavs)``."""
        check_is_fitted(self, "scene_")
        X = check_queries(X)
        return np.array(
            [[self._radius(k, x, y, r) for k in range(self.n_uavs_)] for x, y, r in X]
        ).reshape(len(X), self.n_uavs_)

    def transform(self, X):
        return np.hstack([self.embb_area(X), self.urllc_radius(X)])

    def report(self, user_id: int, uav_id: int, r_g: float | None = None) -> LosReport:
        """Area and radius for one (user, UAV) pair of the fitted scene, timed."""
        check_is_fitted(self, "scene_")
        usr = self.scene_.user(user_id)
        k = int(np.flatnonzero(self.uav_ids_ == uav_id)[0]) if uav_id in self.uav_ids_ else None
        if k is None:
            raise KeyError(f"no UAV with id {uav_id!r}")
        r = usr.speed * self.scene_.dt if r_g is None else r_g
        t0 = time.perf_counter()
        area = self._area(k, usr.x, usr.y, r)
        radius = self._radius(k, usr.x, usr.y, r)
        return LosReport(user_id, uav_id, float(area), float(radius), self.backend_name,
                         time.perf_counter() - t0)
