"""
Closed-form stochastic-geometry LoS backend.

Buildings form a PPP of density ``lambda_b`` with uniform footprint sides
and Rayleigh(``gamma``) heights. ``xi`` is the probability that a
building blocking the 2D projection of a link also blocks the 3D link;
the building density seen by a link is thinned to ``lambda_b / xi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .base import LosBackend
from .exceptions import InvalidParams

_A_MIN = 1e-9


@dataclass(frozen=True)
class BlockageStats:
    lambda_b: float
    e_w: float
    e_l: float
    gamma: float

    def __post_init__(self):
        if self.lambda_b < 0 or self.e_w <= 0 or self.e_l <= 0 or self.gamma <= 0:
            raise InvalidParams("need lambda_b >= 0 and positive e_w, e_l, gamma")

    @classmethod
    def from_bounds(cls, lambda_b: float, l_bounds=(10.0, 20.0), gamma: float = 7.63) -> "BlockageStats":
        mean = 0.5 * (l_bounds[0] + l_bounds[1])
        return cls(lambda_b, mean, mean, gamma)

    @property
    def zeta(self) -> float:
        return 2.0 * self.lambda_b * (self.e_w + self.e_l) / math.pi

    @property
    def tau(self) -> float:
        return self.lambda_b * self.e_w * self.e_l


@dataclass(frozen=True)
class LinkGeom:
    a_k: float  # 2D user-to-UAV-ground-point distance
    h_k: float
    w: float

    def __post_init__(self):
        if not (self.a_k > 0 and self.h_k > 0 and self.w > 0):
            raise InvalidParams("a_k, h_k and w must be positive")


def xi_closed_form(a_k, h_k, w, gamma):
    """Vectorised

        sqrt(pi/2) * gamma/h * [erf(w h / (2 sqrt2 a gamma)) - erf((w - 2a) h / (2 sqrt2 a gamma))]

    This integrates the Rayleigh CDF expression over every offset along the
    link, including offsets where the threshold height is negative. For
    links shorter than ``w / 2`` the value therefore falls towards 0.
    """
    a = np.maximum(np.asarray(a_k, dtype=float), _A_MIN)
    h = np.asarray(h_k, dtype=float)
    w = np.asarray(w, dtype=float)
    s = 2.0 * math.sqrt(2.0) * a * gamma
    out = math.sqrt(math.pi / 2.0) * gamma / h * (erf(w * h / s) - erf((w - 2.0 * a) * h / s))
    return float(out) if np.ndim(out) == 0 else out


def xi(link: LinkGeom, gamma: float) -> float:
    return xi_closed_form(link.a_k, link.h_k, link.w, gamma)


def xi_expected(a_k, h_k, l_bounds, gamma, n_nodes: int = 32):
    """``xi`` averaged over ``w ~ U(L_min, L_max)`` by Gauss-Legendre quadrature."""
    lo, hi = l_bounds
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    w = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
    vals = xi_closed_form(np.asarray(a_k, dtype=float)[..., None], np.asarray(h_k, dtype=float)[..., None], w, gamma)
    out = 0.5 * np.sum(weights * vals, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def los_probability(a_k: float, stats: BlockageStats, xi_val: float) -> float:
    """``exp(-(zeta a + tau) / xi)``."""
    if stats.lambda_b == 0:
        return 1.0
    if xi_val <= 0:
        return 0.0
    return math.exp(-(stats.zeta * a_k + stats.tau) / xi_val)


def embb_area_unclamped(stats: BlockageStats, xi_val: float) -> float:
    """Expected LoS area ``2 pi exp(-tau/xi) / (zeta/xi)^2`` (infinite without buildings)."""
    if stats.lambda_b == 0:
        return math.inf
    if xi_val <= 0:
        return 0.0
    rate = stats.zeta / xi_val
    return 2.0 * math.pi * math.exp(-stats.tau / xi_val) / rate**2


def embb_area(stats: BlockageStats, xi_val: float, r_g: float) -> float:
    if r_g <= 0:
        return 0.0
    return min(embb_area_unclamped(stats, xi_val), math.pi * r_g * r_g)


def urllc_radius_unclamped(stats: BlockageStats, xi_val: float) -> float:
    """Mode ``sqrt(xi / (2 pi lambda_b))`` of the contact-distance density."""
    if stats.lambda_b == 0:
        return math.inf
    if xi_val <= 0:
        return 0.0
    return math.sqrt(xi_val) / math.sqrt(2.0 * math.pi * stats.lambda_b)


def urllc_radius(stats: BlockageStats, xi_val: float, r_g: float) -> float:
    if r_g <= 0:
        return 0.0
    return min(urllc_radius_unclamped(stats, xi_val), r_g)


class AnalyticLos(LosBackend):
    """Analytic (independent-link) LoS area and radius.

    Parameters
    ----------
    lambda_b : float, optional
        Building density per square meter. Estimated at ``fit`` time as
        building count over region area when omitted.
    l_bounds : (float, float), optional
        Footprint side bounds; estimated from the scene's buildings when omitted.
    gamma : float, optional
        Rayleigh height scale; maximum-likelihood estimate when omitted.
    width_mode : {"mean", "expected"}
        ``"mean"`` evaluates ``xi`` at ``w = E[w]``; ``"expected"`` averages
        ``xi`` over ``w ~ U(L_min, L_max)``.
    """

    backend_name = "analytic"

    def __init__(self, lambda_b=None, l_bounds=None, gamma=None, width_mode="mean"):
        self.lambda_b = lambda_b
        self.l_bounds = l_bounds
        self.gamma = gamma
        self.width_mode = width_mode

    def _fit(self, scene):
        if self.width_mode not in ("mean", "expected"):
            raise ValueError(f"unknown width_mode {self.width_mode!r}")
        b = scene.buildings
        lam = self.lambda_b if self.lambda_b is not None else len(b) / scene.region.area
        if self.l_bounds is not None:
            bounds = tuple(self.l_bounds)
        elif b:
            sides = np.array([[c.length, c.width] for c in b])
            bounds = (float(sides.min()), float(sides.max()))
        else:
            bounds = (10.0, 20.0)
        if self.gamma is not None:
            gamma = float(self.gamma)
        elif b:
            hs = np.array([c.height for c in b])
            gamma = float(np.sqrt(np.mean(hs**2) / 2.0))
        else:
            gamma = 7.63
        self.l_bounds_ = bounds
        self.stats_ = BlockageStats.from_bounds(lam, bounds, gamma)

    def xi_for(self, k: int, x: float, y: float) -> float:
        uav = self.scene_.uavs[k]
        a = math.hypot(x - uav.x, y - uav.y)
        if self.width_mode == "expected":
            return xi_expected(a, uav.h, self.l_bounds_, self.stats_.gamma)
        return xi_closed_form(a, uav.h, self.stats_.e_w, self.stats_.gamma)

    def _area(self, k, x, y, r_g):
        if self.stats_.lambda_b == 0:
            return embb_area(self.stats_, 1.0, r_g)
        return embb_area(self.stats_, self.xi_for(k, x, y), r_g)

    def _radius(self, k, x, y, r_g):
        if self.stats_.lambda_b == 0:
            return urllc_radius(self.stats_, 1.0, r_g)
        return urllc_radius(self.stats_, self.xi_for(k, x, y), r_g)
