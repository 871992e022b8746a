import math

import numpy as np
import pytest
import shapely
from hypothesis import given, strategies as st

from ksteiner import GeometryError, UnitBall, build_odc_partition, construct_hex_frame, working_box
from ksteiner.odc import bisector, convex_distance, sector_shape
from ksteiner.oracles import nearest_in_cone_scan

from conftest import random_ellipse_ball, random_polygon_ball

E = UnitBall.euclidean()
FE = construct_hex_frame(E)
D = UnitBall.rectilinear()
FD = construct_hex_frame(D)


def _sample_in(geom, rng, count):
    pts = []
    minx, miny, maxx, maxy = geom.bounds
    tries = 0
    while len(pts) < count and tries < 200 * count:
        tries += 1
        p = shapely.Point(rng.uniform(minx, maxx), rng.uniform(miny, maxy))
        if geom.contains(p):
            pts.append((p.x, p.y))
    return pts


def _consistent(ball, frame, X, P, y):
    got = next(o for o, g in P.cells if g.covers(shapely.Point(*y)))
    want = nearest_in_cone_scan(ball, frame, X, y, P.i)
    if want is None:
        return got is None
    if got is None:
        return False
    return ball.distance(X[got], y) == pytest.approx(want[1], rel=1e-9, abs=1e-9)


def test_working_box_margin():
    b = working_box(np.array([[0.0, 0.0], [3.0, 4.0]]), 3.0)
    assert b == (-16.0, -16.0, 19.0, 20.0)
    assert working_box(np.array([[1.0, 1.0]])) == (0.0, 0.0, 2.0, 2.0)


def test_euclidean_sectors_are_60_degrees():
    for i in range(6):
        s = sector_shape(E, FE, i)
        u, w = s.u_lo, s.u_hi
        ang = math.degrees(math.atan2(u[0] * w[1] - u[1] * w[0], u @ w))
        assert ang == pytest.approx(60.0, abs=1e-9)
        poly = shapely.Polygon(s.polygon())
        assert poly.area == pytest.approx(math.pi / 6, rel=1e-3)


def test_diamond_sector_triangle():
    # the reflected cone between -(1,0) and -(1/2,1/2)
    poly = sector_shape(D, FD, 5).polygon()
    assert shapely.Polygon(poly).normalize().equals_exact(
        shapely.Polygon([(0, 0), (-1, 0), (-0.5, -0.5)]).normalize(), 1e-12)


def test_sector_area_below_ball(rng):
    for _ in range(10):
        b = random_polygon_ball(rng)
        f = construct_hex_frame(b)
        area_b = shapely.Polygon(b.vertices).area
        for i in range(6):
            assert shapely.Polygon(sector_shape(b, f, i).polygon()).area < area_b


def test_convex_distance_examples():
    s = sector_shape(E, FE, 1)  # reflected cone contains direction (1, 0)
    assert convex_distance(s, (0, 0), (2, 0)) == pytest.approx(2.0)
    assert convex_distance(s, (0, 0), (-2, 0)) == math.inf
    assert convex_distance(s, (1, 1), (1, 1)) == 0.0


def test_bisector_euclidean_on_x_equals_one():
    X = np.array([[0.0, 0.0], [2.0, 0.0]])
    s = sector_shape(E, FE, 3)
    b = bisector(s, X[0], X[1], working_box(X))
    pts = b.sample()
    both = [v for v in pts if np.isfinite(convex_distance(s, X[0], v))
            and np.isfinite(convex_distance(s, X[1], v))]
    assert both
    for v in both:
        assert v[0] == pytest.approx(1.0, abs=1e-9)


def _on_ray(s, apex, v):
    d = np.asarray(v) - apex
    n = np.hypot(*d)
    return n < 1e-9 or any(abs(u[0] * d[1] - u[1] * d[0]) <= 1e-7 * n * np.hypot(*u)
                           and u @ d > 0 for u in (s.u_lo, s.u_hi))


def test_bisector_samples_equidistant_or_on_cone_limits(rng):
    """Each bisector point is equidistant, or sits on a cone-limit ray where dominance flips."""
    for _ in range(20):
        ball = [E, D, UnitBall.linf()][int(rng.integers(3))]
        f = construct_hex_frame(ball)
        i = int(rng.integers(6))
        s = sector_shape(ball, f, i)
        X = rng.uniform(-1, 1, (2, 2))
        box = working_box(X)
        for v in bisector(s, X[0], X[1], box).sample():
            dp, dq = convex_distance(s, X[0], v), convex_distance(s, X[1], v)
            if np.isfinite(dp) and np.isfinite(dq) and abs(dp - dq) <= 1e-7 * (1 + dp):
                continue
            assert _on_ray(s, X[0], v) or _on_ray(s, X[1], v)


def test_bisector_identical_points():
    with pytest.raises(GeometryError):
        bisector(sector_shape(E, FE, 0), (1, 1), (1, 1), working_box(np.array([[1.0, 1.0]])))


def test_vertical_pair_ray_only_bisector():
    # cone 5 of the diamond never looks straight up or down
    s = sector_shape(D, FD, 5)
    X = np.array([[0.0, 0.0], [0.0, 3.0]])
    b = bisector(s, X[0], X[1], working_box(X))
    pts = b.sample()
    assert len(pts)
    for v in pts:
        assert _on_ray(s, X[0], v) or _on_ray(s, X[1], v)


def test_single_terminal_has_two_cells():
    X = np.array([[0.3, -0.2]])
    box = working_box(X)
    for i in range(6):
        P = build_odc_partition(E, FE, X, i, box)
        owners = sorted((o for o, _ in P.cells), key=lambda o: -1 if o is None else o)
        assert owners == [None, 0]


def test_empty_terminal_set():
    with pytest.raises(GeometryError):
        build_odc_partition(E, FE, np.zeros((0, 2)), 0, working_box(np.zeros((1, 2))))


def test_two_terminals_grid_sampling():
    X = np.array([[0.0, 0.0], [2.0, 0.0]])
    box = working_box(X)
    g = np.linspace(0.0, 1.0, 52)[1:-1]
    for i in range(6):
        P = build_odc_partition(E, FE, X, i, box)
        for a in g:
            for b in g:
                y = (box.xmin + a * (box.xmax - box.xmin), box.ymin + b * (box.ymax - box.ymin))
                assert _consistent(E, FE, X, P, y)


def test_three_terminal_cells_are_polygons():
    X = np.array([[0.0, 0.0], [3.0, 0.5], [1.2, 2.4]])
    box = working_box(X)
    for i in range(6):
        P = build_odc_partition(E, FE, X, i, box)
        owners = {o for o, _ in P.cells if o is not None}
        assert len(owners) <= 3
        for _, g in P.cells:
            assert g.geom_type in ("Polygon", "MultiPolygon")
        # piecewise linear: every stored ring is a plain coordinate sequence
        for line in P.boundary_lines():
            assert line.ndim == 2 and line.shape[1] == 2


def test_cells_tile_the_box(rng):
    for ball in (E, D, random_ellipse_ball(rng), random_polygon_ball(rng)):
        f = construct_hex_frame(ball)
        X = rng.uniform(0, 1, (6, 2))
        box = working_box(X)
        for i in range(6):
            P = build_odc_partition(ball, f, X, i, box)
            geoms = [g for _, g in P.cells]
            total = sum(g.area for g in geoms)
            assert total == pytest.approx(box.area, rel=1e-9)
            assert shapely.union_all(geoms).area == pytest.approx(box.area, rel=1e-9)
            assert len(P.cells) <= len(X) + 1


def test_interior_samples_match_scan(rng):
    for ball in (E, D, UnitBall.linf(), random_ellipse_ball(rng)):
        f = construct_hex_frame(ball)
        X = rng.uniform(0, 1, (5, 2))
        box = working_box(X)
        for i in range(6):
            P = build_odc_partition(ball, f, X, i, box)
            for owner, g in P.cells:
                for y in _sample_in(g, rng, 8):
                    assert _consistent(ball, f, X, P, y)


def test_voronoi_equivalence(rng):
    X = rng.uniform(0, 1, (6, 2))
    box = working_box(X)
    for i in range(6):
        P = build_odc_partition(E, FE, X, i, box)
        s = sector_shape(E, FE, i)
        for _ in range(30):
            y = rng.uniform(-0.5, 1.5, 2)
            w = P.owner_at(y)
            d = [convex_distance(s, x, y) for x in X]
            if w is None:
                assert all(math.isinf(v) for v in d)
            else:
                assert d[w] == pytest.approx(min(d), rel=1e-9, abs=1e-12)


def test_bigger_box_keeps_owners(rng):
    X = rng.uniform(0, 1, (5, 2))
    small = working_box(X, 1.0)
    big = working_box(X, 3.0)
    for i in range(6):
        A = build_odc_partition(E, FE, X, i, small)
        B = build_odc_partition(E, FE, X, i, big)
        for _ in range(50):
            y = (rng.uniform(small.xmin, small.xmax), rng.uniform(small.ymin, small.ymax))
            assert _consistent(E, FE, X, A, y) and _consistent(E, FE, X, B, y)


def test_partition_json_shape():
    X = np.array([[0.0, 0.0], [1.0, 0.0]])
    P = build_odc_partition(E, FE, X, 2, working_box(X))
    doc = P.to_json()
    assert doc["i"] == 2 and len(doc["box"]) == 4
    assert {c["owner"] for c in doc["cells"]} <= {None, 0, 1}
    for c in doc["cells"]:
        for ring in c["rings"]:
            assert ring[0] == ring[-1]


@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=2, max_size=5, unique=True),
       st.integers(0, 5))
def test_lattice_ties_rectilinear(pts, i):
    """Integer lattices produce facet-parallel ties; cells must still tile and agree."""
    X = np.array(pts, float)
    box = working_box(X)
    P = build_odc_partition(D, FD, X, i, box)
    assert sum(g.area for _, g in P.cells) == pytest.approx(box.area, rel=1e-9)
    rng = np.random.default_rng(len(pts) * 7 + i)
    for _ in range(20):
        y = (rng.uniform(box.xmin, box.xmax), rng.uniform(box.ymin, box.ymax))
        assert _consistent(D, FD, X, P, y)
