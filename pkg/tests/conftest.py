"""Independent oracles shared by the test modules.

Apart from ``mc_visible_area``, which samples a shadow map's own
membership and edges, none of these call into the code under test beyond
plain data types.
"""

import math

import numpy as np
import pytest

from uavlos.geometry import Cuboid, circle_polygon, polygon_area
from uavlos.scene import SceneParams, Uav, Scene, User, Region


def boxes_membership(boxes, x, y):
    """Membership of points in a union of axis-aligned boxes ``(x0, y0, x1, y1)``."""
    inside = np.zeros(np.shape(x), dtype=bool)
    for x0, y0, x1, y1 in boxes:
        inside |= (x > x0) & (x < x1) & (y > y0) & (y < y1)
    return inside


def raster_area(member, bounds, step=1e-3):
    """Area of ``{p : member(p)}`` by counting cell centres."""
    x0, y0, x1, y1 = bounds
    xs = np.arange(x0 + step / 2, x1, step)
    ys = np.arange(y0 + step / 2, y1, step)
    total = 0
    for lo in range(0, len(ys), 256):
        gx, gy = np.meshgrid(xs, ys[lo:lo + 256])
        total += np.count_nonzero(member(gx, gy))
    return total * step * step


def even_odd(rings, x, y):
    """Plain crossing-number membership over a list of closed rings."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = np.zeros(x.shape, dtype=bool)
    for ring in rings:
        r = np.asarray(ring, dtype=float)
        nxt = np.roll(r, -1, axis=0)
        for (xa, ya), (xb, yb) in zip(r, nxt):
            cond = (ya > y) != (yb > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = xa + (y - ya) * (xb - xa) / (yb - ya)
            inside ^= cond & (x < xc)
    return inside


def segments_cross(p, q, starts, ends):
    """Whether each segment ``p[i] -> q[i]`` properly crosses any of the
    segments ``starts[j] -> ends[j]``. Returns shape ``(n,)``."""
    p = np.asarray(p, dtype=float)[:, None, :]
    q = np.asarray(q, dtype=float)[:, None, :]
    a = np.asarray(starts, dtype=float)[None, :, :]
    b = np.asarray(ends, dtype=float)[None, :, :]

    def orient(o, u, v):
        return (u[..., 0] - o[..., 0]) * (v[..., 1] - o[..., 1]) - (u[..., 1] - o[..., 1]) * (v[..., 0] - o[..., 0])

    d1 = orient(a, b, p)
    d2 = orient(a, b, q)
    d3 = orient(p, q, a)
    d4 = orient(p, q, b)
    return (((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0))).any(axis=1)


def sampled_blocked(a, b, cuboid: Cuboid, n=10_000):
    """Parametric sampling of the segment against the cuboid interior."""
    t = (np.arange(n) + 0.5) / n
    pts = np.asarray(a, float)[None, :] + t[:, None] * (np.asarray(b, float) - np.asarray(a, float))[None, :]
    c, s = np.cos(cuboid.yaw), np.sin(cuboid.yaw)
    dx, dy = pts[:, 0] - cuboid.cx, pts[:, 1] - cuboid.cy
    u = c * dx + s * dy
    v = -s * dx + c * dy
    return bool(np.any(
        (np.abs(u) < cuboid.length / 2) & (np.abs(v) < cuboid.width / 2)
        & (pts[:, 2] > 0) & (pts[:, 2] < cuboid.height)
    ))


def mc_visible_area(smap, g, r_g, n_seg, n, rng):
    """Fraction of uniform samples in the mobility polygon whose segment
    from ``g`` stays lit, times the polygon area."""
    poly = circle_polygon(g, r_g, n_seg)
    pts = rng.uniform(-r_g, r_g, (3 * n, 2)) + np.asarray(g)
    pts = pts[even_odd(poly.rings, *pts.T)][:n]
    assert len(pts) == n
    s, e = smap.edges()
    # only edges whose bounding box meets the disk's can be crossed
    gx, gy = g
    near = ((np.minimum(s[:, 0], e[:, 0]) <= gx + r_g) & (np.maximum(s[:, 0], e[:, 0]) >= gx - r_g)
            & (np.minimum(s[:, 1], e[:, 1]) <= gy + r_g) & (np.maximum(s[:, 1], e[:, 1]) >= gy - r_g))
    s, e = s[near], e[near]
    vis = ~smap.contains(pts)
    for lo in range(0, n, 2000):
        chunk = slice(lo, lo + 2000)
        vis[chunk] &= ~segments_cross(np.broadcast_to(g, (len(pts[chunk]), 2)), pts[chunk], s, e)
    frac = vis.mean()
    a = polygon_area(poly)
    return a * frac, a * math.sqrt(frac * (1 - frac) / n)


def clipped_blocked(points, uav, buildings):
    """Whether each ground point's segment to ``uav`` enters the open interior
    of any building. Liang-Barsky clipping in each box's local frame."""
    pts = np.asarray(points, dtype=float)
    blocked = np.zeros(len(pts), dtype=bool)
    ux, uy, uh = map(float, uav)
    for b in buildings:
        c, s = math.cos(b.yaw), math.sin(b.yaw)
        # local coordinates of both endpoints
        px, py = pts[:, 0] - b.cx, pts[:, 1] - b.cy
        p0 = np.column_stack([c * px + s * py, -s * px + c * py, np.zeros(len(pts))])
        qx, qy = ux - b.cx, uy - b.cy
        p1 = np.array([c * qx + s * qy, -s * qx + c * qy, uh])
        d = p1[None, :] - p0
        lo = np.array([-b.length / 2, -b.width / 2, 0.0])
        hi = np.array([b.length / 2, b.width / 2, b.height])
        t0 = np.zeros(len(pts))
        t1 = np.ones(len(pts))
        ok = np.ones(len(pts), dtype=bool)
        for ax in range(3):
            with np.errstate(divide="ignore", invalid="ignore"):
                ta = (lo[ax] - p0[:, ax]) / d[:, ax]
                tb = (hi[ax] - p0[:, ax]) / d[:, ax]
            par = d[:, ax] == 0
            ok &= ~par | ((p0[:, ax] > lo[ax]) & (p0[:, ax] < hi[ax]))
            t0 = np.where(par, t0, np.maximum(t0, np.minimum(ta, tb)))
            t1 = np.where(par, t1, np.minimum(t1, np.maximum(ta, tb)))
        blocked |= ok & (t0 < t1)
    return blocked


def one_uav_scene(buildings=(), uav=(0.0, 0.0, 100.0), users=((10.0, 10.0, 2.0),), region=None, dt=5.0, **uav_kw):
    region = region or Region(-200, 200, -200, 200)
    return Scene(
        region=region,
        buildings=tuple(buildings),
        uavs=(Uav(0, *uav, **uav_kw),),
        users=tuple(User(i, x, y, speed=s) for i, (x, y, s) in enumerate(users)),
        dt=dt,
    )


@pytest.fixture
def small_params():
    return SceneParams(lambda_b=1e-3, uav_count=3, n_users=10)


# acceptance results, printed once at the end of the session
ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(ok), title, detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {n:>2}. {title}: {detail}")
