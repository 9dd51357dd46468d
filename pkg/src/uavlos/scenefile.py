"""YAML scenario files.

Layout::

    format: uavlos-scene/1
    region: {x_min: 0.0, x_max: 400.0, y_min: 0.0, y_max: 400.0}
    dt: 5.0
    seed: 7
    slot: 0
    mobility: {v_max: 4.0, v_min: 0.0, speed_mode: redraw, heading_mode: redraw}
    channel: {alpha: 69.8, beta: 2.0, ...}          # optional
    buildings:
    - {cx: 12.0, cy: 40.0, len: 15.0, wid: 11.0, height: 9.5, yaw: 0.0}
    uavs:
    - {id: 0, x: 200.0, y: 200.0, h: 80.0, range: 250.0, tx_power_dbm: 30.0, gain_dbi: 24.5}
    users:
    - {id: 0, x: 10.0, y: 10.0, speed: 3.0, heading: 1.2, traffic: embb}

Units are meters, seconds, radians, dBm and dBi.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import numpy as np
import yaml

from .channel import ChannelParams
from .exceptions import ParseError
from .geometry import Cuboid, Polygon
from .scene import Mobility, Region, Scene, Uav, User

FORMAT = "uavlos-scene/1"

_BUILDING_KEYS = ("cx", "cy", "len", "wid", "height", "yaw")
_UAV_KEYS = ("id", "x", "y", "h", "range", "tx_power_dbm", "gain_dbi")
_USER_KEYS = ("id", "x", "y", "speed", "heading", "traffic")


def _plain(obj):
    # numpy scalars are not representable by the safe dumper
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def scene_to_dict(scene: Scene) -> dict:
    return _plain({
        "format": FORMAT,
        "region": dataclasses.asdict(scene.region),
        "dt": float(scene.dt),
        "seed": int(scene.seed),
        "slot": int(scene.slot),
        "mobility": dataclasses.asdict(scene.mobility),
        "channel": dataclasses.asdict(scene.channel),
        "buildings": [dict(zip(_BUILDING_KEYS, map(float, b.as_row()))) for b in scene.buildings],
        "uavs": [
            {"id": u.id, "x": u.x, "y": u.y, "h": u.h, "range": u.range,
             "tx_power_dbm": u.tx_power_dbm, "gain_dbi": u.gain_dbi}
            for u in scene.uavs
        ],
        "users": [
            {"id": u.id, "x": u.x, "y": u.y, "speed": u.speed, "heading": u.heading,
             "traffic": u.traffic}
            for u in scene.users
        ],
    })


def save_scene(scene: Scene, path) -> None:
    text = yaml.safe_dump(scene_to_dict(scene), sort_keys=False, default_flow_style=None, width=200)
    Path(path).write_text(text)


def _line_index(node, path=(), out=None) -> dict:
    """Map every key path in a composed YAML tree to its 1-based line."""
    if out is None:
        out = {}
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _line_index(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_index(v, path + (i,), out)
    return out


class _Reader:
    def __init__(self, lines: dict):
        self.lines = lines

    def fail(self, msg, path):
        line = None
        for k in range(len(path), -1, -1):
            if path[:k] in self.lines:
                line = self.lines[path[:k]]
                break
        field = "".join(f"[{p}]" if isinstance(p, int) else (f".{p}" if i else p) for i, p in enumerate(path))
        raise ParseError(msg, line=line, field=field or None)

    def mapping(self, obj, path):
        if not isinstance(obj, dict):
            self.fail("expected a mapping", path)
        return obj

    def seq(self, obj, path):
        if obj is None:
            return []
        if not isinstance(obj, list):
            self.fail("expected a list", path)
        return obj

    def num(self, m, key, path, default=None, positive=False, nonneg=False):
        if key not in m:
            if default is None:
                self.fail("missing required field", path + (key,))
            return default
        v = m[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail("expected a number", path + (key,))
        v = float(v)
        if not math.isfinite(v):
            self.fail("must be finite", path + (key,))
        if positive and not v > 0:
            self.fail("must be positive", path + (key,))
        if nonneg and v < 0:
            self.fail("must be non-negative", path + (key,))
        return v

    def integer(self, m, key, path, default=None):
        if key not in m:
            if default is None:
                self.fail("missing required field", path + (key,))
            return default
        v = m[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail("expected an integer", path + (key,))
        return v

    def choice(self, m, key, path, options, default):
        v = m.get(key, default)
        if v not in options:
            self.fail(f"expected one of {sorted(options)}", path + (key,))
        return v


def scene_from_dict(data, lines: dict | None = None) -> Scene:
    r = _Reader(lines or {})
    data = r.mapping(data, ())
    fmt = data.get("format", FORMAT)
    if fmt != FORMAT:
        r.fail(f"unsupported format {fmt!r}", ("format",))

    reg = r.mapping(data.get("region"), ("region",))
    region_vals = [r.num(reg, k, ("region",)) for k in ("x_min", "x_max", "y_min", "y_max")]
    if not (region_vals[1] > region_vals[0] and region_vals[3] > region_vals[2]):
        r.fail("region bounds must satisfy max > min", ("region",))
    region = Region(*region_vals)

    mob_d = r.mapping(data.get("mobility", {}), ("mobility",))
    mp = ("mobility",)
    v_max = r.num(mob_d, "v_max", mp, default=4.0, nonneg=True)
    v_min = r.num(mob_d, "v_min", mp, default=0.0, nonneg=True)
    if v_min > v_max:
        r.fail("v_min exceeds v_max", mp + ("v_min",))
    mobility = Mobility(
        v_max, v_min,
        r.choice(mob_d, "speed_mode", mp, {"redraw", "fixed"}, "redraw"),
        r.choice(mob_d, "heading_mode", mp, {"redraw", "persist"}, "redraw"),
    )

    ch_d = r.mapping(data.get("channel", {}), ("channel",))
    defaults = ChannelParams()
    ch_kw = {}
    for f in dataclasses.fields(ChannelParams):
        if f.name in ch_d:
            ch_kw[f.name] = r.num(ch_d, f.name, ("channel",))
    unknown = set(ch_d) - {f.name for f in dataclasses.fields(ChannelParams)}
    if unknown:
        r.fail(f"unknown channel keys {sorted(unknown)}", ("channel",))
    try:
        channel = dataclasses.replace(defaults, **ch_kw)
    except ValueError as exc:
        r.fail(str(exc), ("channel",))

    buildings = []
    for i, b in enumerate(r.seq(data.get("buildings"), ("buildings",))):
        p = ("buildings", i)
        b = r.mapping(b, p)
        buildings.append(
            Cuboid(
                cx=r.num(b, "cx", p), cy=r.num(b, "cy", p),
                length=r.num(b, "len", p, positive=True), width=r.num(b, "wid", p, positive=True),
                height=r.num(b, "height", p, positive=True), yaw=r.num(b, "yaw", p, default=0.0),
            )
        )

    uavs = []
    for i, u in enumerate(r.seq(data.get("uavs"), ("uavs",))):
        p = ("uavs", i)
        u = r.mapping(u, p)
        x, y = r.num(u, "x", p), r.num(u, "y", p)
        if not region.contains(x, y):
            r.fail("UAV outside region", p)
        uavs.append(
            Uav(
                id=r.integer(u, "id", p), x=x, y=y, h=r.num(u, "h", p, positive=True),
                range=r.num(u, "range", p, default=250.0, positive=True),
                tx_power_dbm=r.num(u, "tx_power_dbm", p, default=30.0),
                gain_dbi=r.num(u, "gain_dbi", p, default=24.5),
            )
        )

    users = []
    for i, u in enumerate(r.seq(data.get("users"), ("users",))):
        p = ("users", i)
        u = r.mapping(u, p)
        x, y = r.num(u, "x", p), r.num(u, "y", p)
        if not region.contains(x, y):
            r.fail("user outside region", p)
        users.append(
            User(
                id=r.integer(u, "id", p), x=x, y=y,
                speed=r.num(u, "speed", p, default=0.0, nonneg=True),
                heading=r.num(u, "heading", p, default=0.0),
                traffic=r.choice(u, "traffic", p, {"embb", "urllc"}, "embb"),
            )
        )

    for key, items in (("uavs", uavs), ("users", users)):
        ids = [it.id for it in items]
        if len(set(ids)) != len(ids):
            r.fail("duplicate ids", (key,))

    return Scene(
        region=region,
        buildings=tuple(buildings),
        uavs=tuple(uavs),
        users=tuple(users),
        dt=r.num(data, "dt", (), positive=True),
        seed=r.integer(data, "seed", (), default=0),
        mobility=mobility,
        channel=channel,
        slot=r.integer(data, "slot", (), default=0),
    )


def load_scene(path) -> Scene:
    text = Path(path).read_text()
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                         line=mark.line + 1 if mark else None) from exc
    if node is None:
        raise ParseError("empty scenario file", line=1)
    return scene_from_dict(data, _line_index(node))


def dump_polygons(polys, path) -> None:
    """Write polygons (e.g. a shadow map) as a YAML list for inspection."""
    doc = {
        "format": "uavlos-polygons/1",
        "polygons": [
            {"outer": np.asarray(p.outer).tolist(), "holes": [np.asarray(h).tolist() for h in p.holes]}
            for p in polys
        ],
    }
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=200))


def load_polygons(path) -> list[Polygon]:
    doc = yaml.safe_load(Path(path).read_text())
    if not isinstance(doc, dict) or "polygons" not in doc:
        raise ParseError("not a polygon dump")
    return [Polygon(p["outer"], p.get("holes", [])) for p in doc["polygons"]]
