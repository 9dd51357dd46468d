"""
Discretisation baseline: an ``a x a`` grid around the user whose cells
take the LoS status of their centres.

The grid is centred on the user, so the centre cell's status is exactly
the user's own LoS status. Cell LoS is decided by the 3D segment test
against every building (no shadow maps involved).

Area modes
----------
``"flood"`` (default)
    LoS cells in the disk 4-connected to the centre through LoS cells.
    Paths may bend, so lit pockets behind a corner count too.
``"ray"``
    LoS cells in the disk whose straight line of cells back to the centre
    is entirely LoS; the grid-scale analogue of a visibility polygon.
``"count"``
    Every LoS cell in the disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .base import LosBackend
from .geometry import cuboid_array, segments_blocked
from .scene import Scene, Uav

AREA_MODES = ("flood", "ray", "count")


@dataclass(frozen=True, eq=False)
class LosGrid:
    uav_id: int
    origin: tuple[float, float]  # centre of cell (0, 0)
    cell: float
    nx: int
    ny: int
    los: np.ndarray  # (ny, nx) bool, row = y index

    @property
    def center_index(self) -> tuple[int, int]:
        return self.ny // 2, self.nx // 2

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        xs = self.origin[0] + self.cell * np.arange(self.nx)
        ys = self.origin[1] + self.cell * np.arange(self.ny)
        return np.meshgrid(xs, ys)


def _half_cells(r_g: float, a: float) -> int:
    # enough cells either side of the centre cell to cover [c - r_g, c + r_g]
    return max(0, math.ceil(r_g / a - 0.5))


def _candidate_boxes(boxes: np.ndarray, x0, y0, x1, y1) -> np.ndarray:
    if len(boxes) == 0:
        return boxes
    reach = 0.5 * np.hypot(boxes[:, 2], boxes[:, 3])
    keep = (
        (boxes[:, 0] + reach >= x0) & (boxes[:, 0] - reach <= x1)
        & (boxes[:, 1] + reach >= y0) & (boxes[:, 1] - reach <= y1)
    )
    return boxes[keep]


def build_grid(scene: Scene, uav: Uav, center, r_g: float, a: float, boxes=None) -> LosGrid:
    """LoS status of every cell of the grid covering the disk's bounding box."""
    if not a > 0:
        raise ValueError("cell size must be positive")
    n = _half_cells(r_g, a)
    side = 2 * n + 1
    cx, cy = float(center[0]), float(center[1])
    origin = (cx - n * a, cy - n * a)
    xs = origin[0] + a * np.arange(side)
    ys = origin[1] + a * np.arange(side)
    gx, gy = np.meshgrid(xs, ys)
    if boxes is None:
        boxes = cuboid_array(scene.buildings)
    # any blocking building must overlap the bounding box of cells + UAV foot
    x0, x1 = min(xs[0], uav.x), max(xs[-1], uav.x)
    y0, y1 = min(ys[0], uav.y), max(ys[-1], uav.y)
    boxes = _candidate_boxes(np.asarray(boxes).reshape(-1, 6), x0, y0, x1, y1)
    pts = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])
    blocked = segments_blocked(pts, np.array(uav.pos, dtype=float), boxes)
    return LosGrid(uav.id, origin, float(a), side, side, ~blocked.reshape(side, side))


def _disk_mask(grid: LosGrid, r_g: float) -> np.ndarray:
    ci, cj = grid.center_index
    di = np.arange(grid.ny)[:, None] - ci
    dj = np.arange(grid.nx)[None, :] - cj
    return (di * di + dj * dj) * grid.cell**2 <= r_g * r_g * (1 + 1e-12)


def _ray_visible(grid: LosGrid, mask: np.ndarray) -> np.ndarray:
    """Cells of ``mask`` whose sampled centre-to-cell line stays on LoS cells."""
    ci, cj = grid.center_index
    ii, jj = np.nonzero(mask)
    di, dj = ii - ci, jj - cj
    steps = int(2 * max(np.abs(di).max(initial=0), np.abs(dj).max(initial=0))) + 1
    t = np.linspace(0.0, 1.0, steps + 1)
    si = np.rint(ci + np.outer(di, t)).astype(int)
    sj = np.rint(cj + np.outer(dj, t)).astype(int)
    ok = grid.los[si, sj].all(axis=1)
    out = np.zeros_like(mask)
    out[ii[ok], jj[ok]] = True
    return out


def embb_area_da(grid: LosGrid, center, r_g: float, mode: str = "flood") -> float:
    """``a^2`` times the number of LoS cells in the disk counted by ``mode``."""
    if mode not in AREA_MODES:
        raise ValueError(f"unknown area mode {mode!r}")
    ci, cj = grid.center_index
    if not grid.los[ci, cj]:
        return 0.0
    mask = _disk_mask(grid, r_g) & grid.los
    if mode == "flood":
        labels, _ = ndimage.label(mask)  # default structure is 4-connectivity
        mask = labels == labels[ci, cj]
    elif mode == "ray":
        mask = _ray_visible(grid, mask)
    return float(np.count_nonzero(mask)) * grid.cell**2


def urllc_radius_da(grid: LosGrid, center, r_g: float) -> float:
    """Distance to the nearest non-LoS cell centre minus half a cell."""
    ci, cj = grid.center_index
    if not grid.los[ci, cj]:
        return 0.0
    ii, jj = np.nonzero(~grid.los)
    if len(ii) == 0:
        return float(r_g)
    d = grid.cell * np.sqrt((ii - ci) ** 2 + (jj - cj) ** 2).min()
    return float(min(r_g, max(0.0, d - grid.cell / 2.0)))


class GridLos(LosBackend):
    """Grid (discretisation) LoS area and radius.

    Parameters
    ----------
    cell : float
        Resolution ``a`` in meters.
    area_mode : {"flood", "ray", "count"}
        How LoS cells are turned into an area; see module docs.
    """

    backend_name = "grid"

    def __init__(self, cell=0.5, area_mode="flood"):
        self.cell = cell
        self.area_mode = area_mode

    def _fit(self, scene):
        if self.area_mode not in AREA_MODES:
            raise ValueError(f"unknown area mode {self.area_mode!r}")
        self.boxes_ = cuboid_array(scene.buildings)
        self._cache = {}

    def grid(self, k, x, y, r_g) -> LosGrid:
        key = (k, x, y, r_g)
        g = self._cache.get(key)
        if g is None:
            self._cache.clear()
            g = build_grid(self.scene_, self.scene_.uavs[k], (x, y), r_g, self.cell, self.boxes_)
            self._cache[key] = g
        return g

    def _area(self, k, x, y, r_g):
        if r_g <= 0:
            return 0.0
        return embb_area_da(self.grid(k, x, y, r_g), (x, y), r_g, self.area_mode)

    def _radius(self, k, x, y, r_g):
        if r_g <= 0:
            return 0.0
        return urllc_radius_da(self.grid(k, x, y, r_g), (x, y), r_g)
