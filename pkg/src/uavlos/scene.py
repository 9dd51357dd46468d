"""
Scenario generation: PPP buildings, UAV deployment and user mobility.

All randomness comes from Philox (a counter-based 64-bit generator) keyed
by ``(seed, stream, *extra)`` through :class:`numpy.random.SeedSequence`
spawn keys. Streams are disjoint:

======== ====================================================
stream   use
======== ====================================================
0        building count and building geometry
1        UAV count and placement
2        initial users
3        mobility, keyed additionally by slot index
4        fading, keyed additionally by UAV index
======== ====================================================

Counts are drawn by inverting the Poisson CDF with a single uniform and
per-object attributes are drawn row by row, so two scenes sharing a seed
are nested: raising ``lambda_b`` only appends buildings, and raising
``uav_count`` only appends UAVs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy import stats

from .channel import ChannelParams
from .exceptions import InvalidParams
from .geometry import Cuboid

STREAM_BUILDINGS = 0
STREAM_UAVS = 1
STREAM_USERS = 2
STREAM_MOBILITY = 3
STREAM_FADING = 4

Traffic = Literal["embb", "urllc"]


def stream(seed: int, key: int, *extra: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, key, *extra)``."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(key, *extra))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class Region:
    x_min: float = 0.0
    x_max: float = 400.0
    y_min: float = 0.0
    y_max: float = 400.0

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise InvalidParams("region bounds must satisfy max > min")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def contains(self, x, y) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def expanded(self, margin: float) -> "Region":
        return Region(self.x_min - margin, self.x_max + margin, self.y_min - margin, self.y_max + margin)


@dataclass(frozen=True)
class Uav:
    id: int
    x: float
    y: float
    h: float
    range: float = 250.0
    tx_power_dbm: float = 30.0
    gain_dbi: float = 24.5

    def __post_init__(self):
        if not self.range > 0:
            raise InvalidParams("UAV range must be positive")
        if not self.h > 0:
            raise InvalidParams("UAV height must be positive")

    @property
    def pos(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.h)

    @property
    def coverage_radius(self) -> float:
        """Ground radius ``sqrt(R_k^2 - h_k^2)``; 0 when the UAV is out of reach."""
        return math.sqrt(self.range**2 - self.h**2) if self.range > self.h else 0.0


@dataclass(frozen=True)
class User:
    id: int
    x: float
    y: float
    speed: float = 0.0
    heading: float = 0.0
    traffic: Traffic = "embb"

    def __post_init__(self):
        if self.speed < 0:
            raise InvalidParams("user speed must be non-negative")
        if self.traffic not in ("embb", "urllc"):
            raise InvalidParams(f"unknown traffic type {self.traffic!r}")

    @property
    def pos(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Mobility:
    """Per-slot redraw rules.

    ``speed_mode="redraw"`` draws a fresh speed from ``U[v_min, v_max]``
    every slot; ``"fixed"`` keeps each user's initial speed. Headings are
    either redrawn from ``U[0, 2pi)`` or persist (reflecting at walls).
    """

    v_max: float = 4.0
    v_min: float = 0.0
    speed_mode: Literal["redraw", "fixed"] = "redraw"
    heading_mode: Literal["redraw", "persist"] = "redraw"

    def __post_init__(self):
        if not 0 <= self.v_min <= self.v_max:
            raise InvalidParams("need 0 <= v_min <= v_max")
        if self.speed_mode not in ("redraw", "fixed"):
            raise InvalidParams(f"unknown speed_mode {self.speed_mode!r}")
        if self.heading_mode not in ("redraw", "persist"):
            raise InvalidParams(f"unknown heading_mode {self.heading_mode!r}")


@dataclass(frozen=True)
class Scene:
    region: Region
    buildings: tuple[Cuboid, ...] = ()
    uavs: tuple[Uav, ...] = ()
    users: tuple[User, ...] = ()
    dt: float = 5.0
    seed: int = 0
    mobility: Mobility = field(default_factory=Mobility)
    channel: ChannelParams = field(default_factory=ChannelParams)
    slot: int = 0

    def __post_init__(self):
        object.__setattr__(self, "buildings", tuple(self.buildings))
        object.__setattr__(self, "uavs", tuple(self.uavs))
        object.__setattr__(self, "users", tuple(self.users))
        if not self.dt > 0:
            raise InvalidParams("dt must be positive")
        for kind, items in (("uav", self.uavs), ("user", self.users)):
            ids = [it.id for it in items]
            if len(set(ids)) != len(ids):
                raise InvalidParams(f"duplicate {kind} ids")

    def uav(self, uav_id: int) -> Uav:
        for u in self.uavs:
            if u.id == uav_id:
                return u
        raise KeyError(f"no UAV with id {uav_id!r}")

    def user(self, user_id: int) -> User:
        for u in self.users:
            if u.id == user_id:
                return u
        raise KeyError(f"no user with id {user_id!r}")

    def with_uavs(self, uavs) -> "Scene":
        return replace(self, uavs=tuple(uavs))


@dataclass(frozen=True)
class SceneParams:
    """Generator settings; defaults follow the 400 m x 400 m urban setup."""

    lambda_b: float = 1e-3
    uav_count: int | None = 1
    lambda_u: float = 0.0
    l_bounds: tuple[float, float] = (10.0, 20.0)
    gamma: float = 7.63
    v_max: float = 4.0
    v_min: float = 0.0
    uav_h_bounds: tuple[float, float] = (50.0, 120.0)
    uav_range: float = 250.0
    tx_power_dbm: float = 30.0
    gain_dbi: float = 24.5
    dt: float = 5.0
    region: Region = field(default_factory=Region)
    n_users: int = 10
    urllc_fraction: float = 0.5
    speed_mode: Literal["redraw", "fixed"] = "redraw"
    heading_mode: Literal["redraw", "persist"] = "redraw"
    random_yaw: bool = False

    def __post_init__(self):
        lo, hi = self.l_bounds
        hlo, hhi = self.uav_h_bounds
        if self.lambda_b < 0 or self.lambda_u < 0:
            raise InvalidParams("densities must be non-negative")
        if not 0 < lo <= hi:
            raise InvalidParams("l_bounds must satisfy 0 < L_min <= L_max")
        if not 0 < hlo <= hhi:
            raise InvalidParams("uav_h_bounds must satisfy 0 < h_min <= h_max")
        if self.gamma <= 0 or self.dt <= 0 or self.uav_range <= 0:
            raise InvalidParams("gamma, dt and uav_range must be positive")
        if not 0 <= self.v_min <= self.v_max:
            raise InvalidParams("need 0 <= v_min <= v_max")
        if self.uav_count is not None and self.uav_count < 0:
            raise InvalidParams("uav_count must be non-negative")
        if self.n_users < 0 or not 0 <= self.urllc_fraction <= 1:
            raise InvalidParams("bad user settings")

    @property
    def mobility(self) -> Mobility:
        return Mobility(self.v_max, self.v_min, self.speed_mode, self.heading_mode)


def _poisson_count(rng: np.random.Generator, mean: float) -> int:
    if mean <= 0:
        rng.random()  # keep stream consumption independent of the mean
        return 0
    return int(stats.poisson.ppf(rng.random(), mean))


def generate_buildings(params: SceneParams, seed: int) -> tuple[Cuboid, ...]:
    reg = params.region
    rng = stream(seed, STREAM_BUILDINGS)
    n = _poisson_count(rng, params.lambda_b * reg.area)
    u = rng.random((n, 6))
    lo, hi = params.l_bounds
    out = []
    for row in u:
        yaw = row[5] * math.pi if params.random_yaw else 0.0
        out.append(
            Cuboid(
                cx=reg.x_min + row[0] * reg.width,
                cy=reg.y_min + row[1] * reg.height,
                length=lo + row[2] * (hi - lo),
                width=lo + row[3] * (hi - lo),
                # inverse-CDF Rayleigh; 1 - u keeps the log argument in (0, 1]
                height=max(params.gamma * math.sqrt(-2.0 * math.log1p(-row[4])), 1e-9),
                yaw=yaw,
            )
        )
    return tuple(out)


def generate_uavs(params: SceneParams, seed: int) -> tuple[Uav, ...]:
    reg = params.region
    rng = stream(seed, STREAM_UAVS)
    if params.uav_count is None:
        n = _poisson_count(rng, params.lambda_u * reg.area)
    else:
        rng.random()
        n = params.uav_count
    u = rng.random((n, 3))
    hlo, hhi = params.uav_h_bounds
    return tuple(
        Uav(
            id=i,
            x=reg.x_min + row[0] * reg.width,
            y=reg.y_min + row[1] * reg.height,
            h=hlo + row[2] * (hhi - hlo),
            range=params.uav_range,
            tx_power_dbm=params.tx_power_dbm,
            gain_dbi=params.gain_dbi,
        )
        for i, row in enumerate(u)
    )


def generate_users(params: SceneParams, seed: int) -> tuple[User, ...]:
    reg = params.region
    rng = stream(seed, STREAM_USERS)
    u = rng.random((params.n_users, 5))
    return tuple(
        User(
            id=i,
            x=reg.x_min + row[0] * reg.width,
            y=reg.y_min + row[1] * reg.height,
            speed=params.v_min + row[2] * (params.v_max - params.v_min),
            heading=2.0 * math.pi * row[3],
            traffic="urllc" if row[4] < params.urllc_fraction else "embb",
        )
        for i, row in enumerate(u)
    )


def generate_scene(params: SceneParams, seed: int, channel: ChannelParams | None = None) -> Scene:
    """Draw a scene. Identical ``(params, seed)`` always give identical scenes."""
    if not isinstance(params, SceneParams):
        raise InvalidParams("params must be a SceneParams")
    return Scene(
        region=params.region,
        buildings=generate_buildings(params, seed),
        uavs=generate_uavs(params, seed),
        users=generate_users(params, seed),
        dt=params.dt,
        seed=int(seed),
        mobility=params.mobility,
        channel=channel if channel is not None else ChannelParams(),
    )


def mobility_disk(u: User, dt: float) -> tuple[tuple[float, float], float]:
    """Centre and radius ``v_g * dt`` of the region reachable within a slot."""
    if not dt > 0:
        raise InvalidParams("dt must be positive")
    return (u.x, u.y), u.speed * dt


def _fold(u, lo, hi):
    """Specular reflection of coordinate(s) ``u`` into ``[lo, hi]``.

    Returns the folded value and whether an odd number of reflections
    happened (which flips the velocity component).
    """
    w = hi - lo
    v = np.mod(np.asarray(u, dtype=float) - lo, 2.0 * w)
    folded = lo + w - np.abs(v - w)
    flipped = v > w
    return folded, flipped


def user_path(u: User, dt: float, region: Region, n_steps: int) -> np.ndarray:
    """Positions at ``n_steps + 1`` equally spaced instants of the slot,
    moving in a straight line and reflecting off the region boundary."""
    t = np.linspace(0.0, dt, n_steps + 1)
    x = u.x + u.speed * t * math.cos(u.heading)
    y = u.y + u.speed * t * math.sin(u.heading)
    fx, _ = _fold(x, region.x_min, region.x_max)
    fy, _ = _fold(y, region.y_min, region.y_max)
    return np.column_stack([fx, fy])


def advance_users(scene: Scene) -> Scene:
    """Move every user for one slot and redraw speed/heading per the mobility mode."""
    rng = stream(scene.seed, STREAM_MOBILITY, scene.slot)
    draws = rng.random((len(scene.users), 2))
    mob = scene.mobility
    reg = scene.region
    out = []
    for usr, (us, uh) in zip(scene.users, draws):
        x = usr.x + usr.speed * scene.dt * math.cos(usr.heading)
        y = usr.y + usr.speed * scene.dt * math.sin(usr.heading)
        fx, flip_x = _fold(x, reg.x_min, reg.x_max)
        fy, flip_y = _fold(y, reg.y_min, reg.y_max)
        if mob.heading_mode == "redraw":
            heading = 2.0 * math.pi * uh
        else:
            dx, dy = math.cos(usr.heading), math.sin(usr.heading)
            heading = math.atan2(-dy if flip_y else dy, -dx if flip_x else dx) % (2.0 * math.pi)
        if mob.speed_mode == "redraw":
            speed = mob.v_min + us * (mob.v_max - mob.v_min)
        else:
            speed = usr.speed
        out.append(replace(usr, x=float(fx), y=float(fy), speed=float(speed), heading=float(heading)))
    return replace(scene, users=tuple(out), slot=scene.slot + 1)
