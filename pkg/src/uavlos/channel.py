"""mmWave link budget: path loss, received power, Rician fading, throughput."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidDistance, InvalidParams


@dataclass(frozen=True)
class ChannelParams:
    """Link-budget constants (73 GHz LoS model defaults).

    ``bandwidth_hz`` and the noise figure are not fixed by the underlying
    model; 100 MHz and 9 dB are typical mmWave values.
    """

    alpha: float = 69.8
    beta: float = 2.0
    bandwidth_hz: float = 100e6
    noise_figure_db: float = 9.0
    rician_k: float = 2.0
    carrier_ghz: float = 73.0
    user_gain_dbi: float = 24.5
    thermal_noise_dbm_hz: float = -174.0

    def __post_init__(self):
        if self.alpha <= 0 or self.bandwidth_hz <= 0 or self.carrier_ghz <= 0:
            raise InvalidParams("alpha, bandwidth and carrier frequency must be positive")
        if self.beta < 1:
            raise InvalidParams("beta must be >= 1")
        if self.noise_figure_db < 0 or self.rician_k < 0:
            raise InvalidParams("noise figure and Rician K must be non-negative")

    @property
    def noise_dbm(self) -> float:
        return self.thermal_noise_dbm_hz + 10.0 * math.log10(self.bandwidth_hz) + self.noise_figure_db


def path_loss_db(d, p: ChannelParams):
    d = np.asarray(d, dtype=float)
    if np.any(~(d > 0)):
        raise InvalidDistance("link distance must be positive")
    out = p.alpha + 10.0 * p.beta * np.log10(d)
    return float(out) if out.ndim == 0 else out


def rx_power_dbm(uav, user_gain_dbi: float, d, p: ChannelParams):
    """Received power ``P_k + G_k + G_g - PL`` in dBm."""
    return uav.tx_power_dbm + uav.gain_dbi + user_gain_dbi - path_loss_db(d, p)


def draw_fading(p: ChannelParams, rng: np.random.Generator, size=None):
    """Rician envelope ``|h|`` normalised to ``E[|h|^2] = 1``.

    An infinite K-factor gives the deterministic pure-LoS value 1.
    """
    k = p.rician_k
    if math.isinf(k):
        return 1.0 if size is None else np.ones(size)
    los = math.sqrt(k / (k + 1.0))
    sigma = math.sqrt(1.0 / (2.0 * (k + 1.0)))
    re = los + sigma * rng.standard_normal(size)
    im = sigma * rng.standard_normal(size)
    return np.hypot(re, im)


def throughput_bps(rx_dbm, h_mag, p: ChannelParams):
    """Shannon rate ``B log2(1 + P |h|^2 / sigma0)`` with both powers in mW."""
    snr = 10.0 ** ((np.asarray(rx_dbm, dtype=float) - p.noise_dbm) / 10.0)
    out = p.bandwidth_hz * np.log2(1.0 + snr * np.asarray(h_mag, dtype=float) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def link_throughput(uav, points, p: ChannelParams, h_mag=1.0):
    """Throughput from ``uav`` at ground points ``(n, 2)`` (user height 0)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    d = np.sqrt((pts[:, 0] - uav.x) ** 2 + (pts[:, 1] - uav.y) ** 2 + uav.h**2)
    rx = rx_power_dbm(uav, p.user_gain_dbi, d, p)
    return throughput_bps(rx, h_mag, p)
