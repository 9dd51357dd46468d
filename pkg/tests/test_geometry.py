import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from uavlos.exceptions import DegenerateInput, OriginOccluded
from uavlos.geometry import (
    EPS_GEOM,
    Cuboid,
    Location,
    Polygon,
    circle_polygon,
    convex_hull,
    point_in_polygon,
    point_segment_distance,
    points_segments_distance,
    polygon_area,
    polygon_intersection,
    polygon_union,
    segment_blocked_3d,
    triangle_areas,
    triangulate,
    visibility_polygon,
)

from conftest import boxes_membership, even_odd, raster_area, sampled_blocked, segments_cross


def square(x0, y0, s=1.0, s_y=None):
    s_y = s if s_y is None else s_y
    return Polygon([(x0, y0), (x0 + s, y0), (x0 + s, y0 + s_y), (x0, y0 + s_y)])


def ring_set(ring):
    return {tuple(np.round(v, 12)) for v in np.asarray(ring)}


def brute_hull(points):
    """O(n^3) hull: directed pairs with every other point strictly to the left."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    out = set()
    for i, j in itertools.permutations(range(len(pts)), 2):
        a, b = pts[i], pts[j]
        others = np.delete(pts, [i, j], axis=0)
        cr = (b[0] - a[0]) * (others[:, 1] - a[1]) - (b[1] - a[1]) * (others[:, 0] - a[0])
        if np.all(cr > 0):
            out.add(tuple(a))
            out.add(tuple(b))
    return out


@st.composite
def star_polygon(draw, n_min=3, n_max=14, with_hole=False):
    n = draw(st.integers(n_min, n_max))
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    ang = np.sort(rng.uniform(0, 2 * np.pi, n))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    if gaps.max() >= np.pi - 1e-3 or gaps.min() < 1e-3:
        ang = 2 * np.pi * (np.arange(n) + rng.uniform(0.1, 0.9, n)) / n
    r = rng.uniform(3.0, 10.0, n)
    outer = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
    holes = []
    if with_hole:
        # keep the hole's circumcircle clear of every outer edge
        a, b = outer, np.roll(outer, -1, axis=0)
        e = b - a
        t = np.clip(-(a * e).sum(1) / (e * e).sum(1), 0, 1)
        clearance = np.hypot(*(a + t[:, None] * e).T).min()
        h = min(rng.uniform(0.3, 1.5), 0.6 * clearance / math.sqrt(2))
        holes = [[(-h, -h), (h, -h), (h, h), (-h, h)]]
    return Polygon(outer, holes)


# --------------------------------------------------------------------------
# convex hull


def test_hull_drops_interior_point():
    hull = convex_hull([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)])
    assert ring_set(hull.outer) == {(0, 0), (1, 0), (1, 1), (0, 1)}
    assert polygon_area(hull) == pytest.approx(1.0)


def test_hull_identity_on_triangle():
    hull = convex_hull([(0, 0), (2, 0), (1, 1)])
    assert ring_set(hull.outer) == {(0, 0), (2, 0), (1, 1)}


def test_hull_projected_cube_is_hexagon():
    # unit cube seen from a UAV off one corner; projections by hand
    uav = np.array([-3.0, -2.0, 5.0])
    cube = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    proj = cube[:, :2] - cube[:, 2:] * (cube[:, :2] - uav[:2]) / (cube[:, 2:] - uav[2])
    hull = convex_hull(proj)
    assert len(hull.outer) == 6
    assert ring_set(hull.outer) == {tuple(np.round(p, 12)) for p in brute_hull(proj)}


@pytest.mark.parametrize("pts", [[(0, 0), (1, 1), (2, 2), (3, 3)], [(0, 0), (0, 0), (1, 0)], [(1, 1)]])
def test_hull_degenerate(pts):
    with pytest.raises(DegenerateInput):
        convex_hull(pts)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=3, max_size=40))
def test_hull_idempotent_and_matches_brute_force(pts):
    try:
        hull = convex_hull(pts)
    except DegenerateInput:
        return
    again = convex_hull(hull.outer)
    assert np.array_equal(again.outer, hull.outer)
    assert ring_set(hull.outer) == {tuple(np.round(p, 12)) for p in brute_hull(pts)}
    assert len(hull.outer) >= 3 and polygon_area(hull) > 0


# --------------------------------------------------------------------------
# booleans


def test_union_disjoint_unchanged():
    a, b = square(0, 0), square(3, 0)
    out = polygon_union([a, b])
    assert len(out) == 2
    assert sorted(polygon_area(p) for p in out) == pytest.approx([1.0, 1.0])
    assert {frozenset(ring_set(p.outer)) for p in out} == {frozenset(ring_set(a.outer)), frozenset(ring_set(b.outer))}


def test_union_overlapping_squares_is_rectangle():
    out = polygon_union([square(0, 0), square(0.5, 0)])
    assert len(out) == 1
    assert ring_set(out[0].outer) == {(0, 0), (1.5, 0), (1.5, 1), (0, 1)}
    # frozen from raster_area(boxes [(0,0,1,1), (0.5,0,1.5,1)], step 1e-3)
    oracle = raster_area(lambda x, y: boxes_membership([(0, 0, 1, 1), (0.5, 0, 1.5, 1)], x, y), (0, 0, 1.5, 1))
    assert oracle == pytest.approx(1.5, rel=1e-6)
    assert polygon_area(out[0]) == pytest.approx(oracle, rel=1e-6)


def test_union_frame_has_one_hole():
    bars = [(0, 0, 3, 1), (0, 2, 3, 3), (0, 0, 1, 3), (2, 0, 3, 3)]
    polys = [square(x0, y0, x1 - x0, y1 - y0) for x0, y0, x1, y1 in bars]
    out = polygon_union(polys)
    assert len(out) == 1 and len(out[0].holes) == 1
    hole_area = abs(polygon_area(Polygon(out[0].holes[0])))
    oracle_hole = 9.0 - raster_area(lambda x, y: boxes_membership(bars, x, y), (0, 0, 3, 3), step=2e-3)
    assert hole_area == pytest.approx(1.0)
    assert oracle_hole == pytest.approx(hole_area, abs=1e-6)


def test_intersection_examples():
    a = circle_polygon((0, 0), 2.0, 17)
    (same,) = polygon_intersection(a, a)
    assert polygon_area(same) == pytest.approx(polygon_area(a), rel=1e-9)
    assert polygon_intersection(square(0, 0), square(5, 5)) == []
    (q,) = polygon_intersection(square(0, 0), square(0.5, 0.5))
    oracle = raster_area(lambda x, y: boxes_membership([(0, 0, 1, 1)], x, y) & boxes_membership([(0.5, 0.5, 1.5, 1.5)], x, y),
                         (0, 0, 1.5, 1.5))
    assert oracle == pytest.approx(0.25, rel=1e-6)
    assert polygon_area(q) == pytest.approx(oracle, rel=1e-6)


def _random_boxes(rng, n):
    xy = rng.uniform(0, 8, (n, 2))
    wh = rng.uniform(0.5, 4, (n, 2))
    return [(x, y, x + w, y + h) for (x, y), (w, h) in zip(xy, wh)]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 7))
def test_boolean_point_set_oracle(seed, n):
    rng = np.random.default_rng(seed)
    boxes = _random_boxes(rng, n)
    polys = [square(x0, y0, x1 - x0, y1 - y0) for x0, y0, x1, y1 in boxes]
    union = polygon_union(polys)
    areas = [polygon_area(p) for p in polys]
    total = sum(polygon_area(p) for p in union)
    assert max(areas) - 1e-9 <= total <= sum(areas) + 1e-9

    probes = rng.uniform(-1, 13, (1000, 2))
    starts = np.concatenate([p.edges()[0] for p in polys])
    ends = np.concatenate([p.edges()[1] for p in polys])
    clear = points_segments_distance(probes, starts, ends).min(axis=1) > 1e-6
    want = boxes_membership(boxes, probes[:, 0], probes[:, 1])
    got = np.zeros(len(probes), dtype=bool)
    for p in union:
        got |= even_odd(p.rings, probes[:, 0], probes[:, 1])
    assert np.array_equal(got[clear], want[clear])

    a, b = polys[0], polys[-1]
    inter = polygon_intersection(a, b)
    want_i = boxes_membership([boxes[0]], *probes.T) & boxes_membership([boxes[-1]], *probes.T)
    got_i = np.zeros(len(probes), dtype=bool)
    for p in inter:
        got_i |= even_odd(p.rings, *probes.T)
    assert np.array_equal(got_i[clear], want_i[clear])


def test_union_disjoint_iff_additive():
    a, b = square(0, 0), square(2, 0)
    assert sum(p.area for p in polygon_union([a, b])) == pytest.approx(a.area + b.area)
    c = square(0.5, 0)
    assert sum(p.area for p in polygon_union([a, c])) < a.area + c.area


# --------------------------------------------------------------------------
# visibility


def ray_oracle_area(origin, outer: Polygon, obstacles, n_dir=10_000):
    """Area of the visible region as the integral of D(phi)^2 / 2."""
    starts = np.concatenate([outer.edges()[0]] + [o.edges()[0] for o in obstacles])
    ends = np.concatenate([outer.edges()[1]] + [o.edges()[1] for o in obstacles])
    phi = 2 * np.pi * (np.arange(n_dir) + 0.5 / math.sqrt(2)) / n_dir  # avoid exact vertex hits
    d = np.column_stack([np.cos(phi), np.sin(phi)])
    o = np.asarray(origin, dtype=float)
    e = ends - starts
    w = starts - o
    den = d[:, None, 0] * e[None, :, 1] - d[:, None, 1] * e[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[None, :, 0] * e[None, :, 1] - w[None, :, 1] * e[None, :, 0]) / den
        s = (w[None, :, 0] * d[:, None, 1] - w[None, :, 1] * d[:, None, 0]) / den
    ok = (np.abs(den) > 1e-15) & (t > 0) & (s >= 0) & (s <= 1)
    dist = np.where(ok, t, np.inf).min(axis=1)
    return float(np.sum(dist**2) / 2 * (2 * np.pi / n_dir))


def test_visibility_no_obstacles_is_outer():
    outer = circle_polygon((0, 0), 10, 32)
    vis = visibility_polygon((1, 2), outer, [])
    assert polygon_area(vis) == pytest.approx(polygon_area(outer), rel=1e-12)


def test_visibility_one_square_matches_ray_oracle():
    outer = circle_polygon((0, 0), 10, 64)
    obs = [square(2, -1, 2)]
    vis = visibility_polygon((0, 0), outer, obs)
    oracle = ray_oracle_area((0, 0), outer, obs)
    assert polygon_area(vis) == pytest.approx(oracle, rel=5e-3)
    assert polygon_area(vis) < polygon_area(outer) - polygon_area(obs[0])


def test_visibility_obstacle_touching_outer():
    outer = square(-5, -5, 10)
    obs = [square(3, -1, 2)]  # right edge lies on the outer boundary
    vis = visibility_polygon((0, 0), outer, obs)
    oracle = ray_oracle_area((0, 0), outer, obs)
    assert polygon_area(vis) < polygon_area(outer)
    assert polygon_area(vis) == pytest.approx(oracle, rel=5e-3)


def test_visibility_origin_occluded():
    with pytest.raises(OriginOccluded):
        visibility_polygon((0.5, 0.5), square(-5, -5, 10), [square(0, 0)])


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 2**31 - 1))
def test_visibility_subset_and_ray_property(seed):
    rng = np.random.default_rng(seed)
    outer = circle_polygon((0, 0), 20, 48)
    obstacles = []
    for x0, y0, x1, y1 in _random_boxes(rng, 6):
        p = square(x0 - 10, y0 - 10, x1 - x0, y1 - y0)
        if point_in_polygon((0, 0), p) == Location.OUTSIDE:
            obstacles.append(p)
    obstacles = polygon_union(obstacles)
    origin = np.zeros(2)
    vis = visibility_polygon(origin, outer, obstacles)
    assert polygon_area(vis) <= polygon_area(outer) + 1e-9
    assert point_in_polygon(origin, vis) != Location.OUTSIDE

    probes = rng.uniform(-20, 20, (1000, 2))
    in_outer = even_odd(outer.rings, *probes.T)
    in_vis = even_odd(vis.rings, *probes.T)
    vs, ve = vis.edges()
    clear = points_segments_distance(probes, vs, ve).min(axis=1) > 1e-6
    if obstacles:
        os_ = np.concatenate([o.edges()[0] for o in obstacles])
        oe = np.concatenate([o.edges()[1] for o in obstacles])
        clear &= points_segments_distance(probes, os_, oe).min(axis=1) > 1e-6
        in_obs = np.zeros(len(probes), dtype=bool)
        for o in obstacles:
            in_obs |= even_odd(o.rings, *probes.T)
        crosses = segments_cross(np.zeros_like(probes), probes, os_, oe)
    else:
        in_obs = crosses = np.zeros(len(probes), dtype=bool)
    sel = clear & in_outer
    assert not np.any(in_vis[sel] & in_obs[sel])
    assert not np.any(in_vis[sel] & crosses[sel])
    assert np.all((crosses | in_obs)[sel & ~in_vis])


# --------------------------------------------------------------------------
# triangulation and area


def test_triangulate_square():
    tris = triangulate(square(0, 0))
    assert tris.shape == (2, 3, 2)
    assert triangle_areas(tris) == pytest.approx([0.5, 0.5])


@pytest.mark.parametrize("n", [3, 5, 8, 33])
def test_triangulate_convex_ngon_count(n):
    assert len(triangulate(circle_polygon((1, -1), 3, n))) == n - 2


def test_triangulate_square_with_hole():
    p = Polygon([(0, 0), (4, 0), (4, 4), (0, 4)], [[(1, 1), (3, 1), (3, 3), (1, 3)]])
    tris = triangulate(p)
    assert len(tris) == 8
    oracle = raster_area(lambda x, y: boxes_membership([(0, 0, 4, 4)], x, y) & ~boxes_membership([(1, 1, 3, 3)], x, y),
                         (0, 0, 4, 4), step=2e-3)
    assert triangle_areas(tris).sum() == pytest.approx(oracle, rel=1e-6)


def test_triangulate_degenerate():
    with pytest.raises(DegenerateInput):
        triangulate(Polygon([(0, 0), (1, 1), (2, 2)]))


@settings(max_examples=60, deadline=None)
@given(star_polygon(with_hole=False) | star_polygon(n_min=6, with_hole=True))
def test_triangulation_conservation(p):
    tris = triangulate(p)
    assert triangle_areas(tris).sum() == pytest.approx(polygon_area(p), rel=1e-9)
    # interior-disjoint cover: every clear probe lies in exactly one triangle iff inside p
    rng = np.random.default_rng(0)
    probes = rng.uniform(-10, 10, (500, 2))
    count = np.zeros(len(probes), dtype=int)
    for t in tris:
        count += even_odd([t], *probes.T)
    s = np.concatenate([tris[:, i] for i in range(3)])
    e = np.concatenate([tris[:, (i + 1) % 3] for i in range(3)])
    clear = points_segments_distance(probes, s, e).min(axis=1) > 1e-6
    inside = even_odd(p.rings, *probes.T)
    assert np.array_equal(count[clear], inside[clear].astype(int))


def test_polygon_area_examples():
    assert polygon_area(square(0, 0)) == 1.0
    assert polygon_area(Polygon(square(0, 0).outer, [square(0.25, 0.25, 0.5).outer])) == pytest.approx(0.75)


def test_polygon_area_random_12gon_monte_carlo():
    rng = np.random.default_rng(12)
    ang = 2 * np.pi * (np.arange(12) + rng.uniform(0.1, 0.9, 12)) / 12
    r = rng.uniform(2, 5, 12)
    p = Polygon(np.column_stack([r * np.cos(ang), r * np.sin(ang)]))
    n = 1_000_000
    pts = rng.uniform(-5, 5, (n, 2))
    frac = even_odd(p.rings, *pts.T).mean()
    est, se = 100 * frac, 100 * math.sqrt(frac * (1 - frac) / n)
    assert abs(polygon_area(p) - est) < 3 * se


# --------------------------------------------------------------------------
# point location and distances


def test_point_in_polygon_examples():
    sq = square(0, 0)
    assert point_in_polygon((0.5, 0.5), sq) == Location.INSIDE
    assert point_in_polygon((2, 2), sq) == Location.OUTSIDE
    assert point_in_polygon((1.0, 0.5), sq) == Location.BOUNDARY
    assert point_in_polygon((1.0 + EPS_GEOM / 2, 0.5), sq) == Location.BOUNDARY


def test_point_in_polygon_hole_is_outside():
    p = Polygon(square(0, 0, 4).outer, [square(1, 1, 2).outer])
    assert point_in_polygon((2, 2), p) == Location.OUTSIDE
    assert point_in_polygon((0.5, 2), p) == Location.INSIDE


def test_point_segment_distance_examples():
    assert point_segment_distance((0, 1), (-1, 0), (1, 0)) == pytest.approx(1.0)
    assert point_segment_distance((2, 0), (-1, 0), (1, 0)) == pytest.approx(1.0)
    t = np.linspace(0, 1, 100_000)
    brute = np.hypot(3 - 0, 4 - 0.001 * t).min()
    assert point_segment_distance((3, 4), (0, 0), (0, 0.001)) == pytest.approx(brute, abs=1e-9)
    assert brute == pytest.approx(4.9992, abs=1e-4)


@settings(max_examples=50, deadline=None)
@given(st.tuples(*[st.floats(-50, 50)] * 6))
def test_point_segment_distance_brute_force(v):
    q, a, b = np.array(v[:2]), np.array(v[2:4]), np.array(v[4:])
    t = np.linspace(0, 1, 20_001)
    pts = a[None, :] + t[:, None] * (b - a)[None, :]
    brute = np.hypot(*(pts - q).T).min()
    step = np.hypot(*(b - a)) / 20_000
    d = point_segment_distance(q, a, b)
    assert d <= brute + 1e-9 and brute - d <= step


# --------------------------------------------------------------------------
# 3D occlusion


def test_segment_blocked_examples():
    a, b = (0, 0, 0), (100, 0, 100)
    tall = Cuboid(50, 0, 10, 10, 80)
    low = Cuboid(50, 0, 10, 10, 20)
    assert segment_blocked_3d(a, b, tall) is True
    assert sampled_blocked(a, b, tall)
    assert segment_blocked_3d(a, b, low) is False
    assert not sampled_blocked(a, b, low)
    assert segment_blocked_3d((0, 0, 30), (100, 0, 30), low) is False


def test_segment_blocked_random_pairs_match_sampling():
    rng = np.random.default_rng(2024)
    checked = 0
    delta = 0.05
    for _ in range(10_000):
        c = Cuboid(*rng.uniform(-20, 20, 2), *rng.uniform(2, 20, 2), rng.uniform(1, 40), rng.uniform(0, np.pi))
        a = np.array([*rng.uniform(-60, 60, 2), 0.0])
        b = np.array([*rng.uniform(-60, 60, 2), rng.uniform(1, 80)])
        shrink = Cuboid(c.cx, c.cy, c.length - 2 * delta, c.width - 2 * delta, c.height - delta, c.yaw)
        grow = Cuboid(c.cx, c.cy, c.length + 2 * delta, c.width + 2 * delta, c.height + delta, c.yaw)
        lo = sampled_blocked(a, b, shrink, n=2_000)
        if lo != sampled_blocked(a, b, grow, n=2_000):
            continue  # within the clearance band
        checked += 1
        assert segment_blocked_3d(a, b, c) == lo
    assert checked > 9_000


# --------------------------------------------------------------------------
# circle polygon


def test_circle_polygon_examples():
    assert polygon_area(circle_polygon((0, 0), 1, 4)) == pytest.approx(2.0)
    assert abs(polygon_area(circle_polygon((0, 0), 1, 64)) - math.pi) / math.pi < 0.0017
    p = circle_polygon((5, 5), 10, 64)
    assert np.hypot(p.outer[:, 0] - 5, p.outer[:, 1] - 5) == pytest.approx(np.full(64, 10.0))


@pytest.mark.parametrize("n", [8, 16, 64, 100])
def test_circle_polygon_area_formula(n):
    assert polygon_area(circle_polygon((1, 2), 3, n)) == pytest.approx(0.5 * n * 9 * math.sin(2 * math.pi / n))
