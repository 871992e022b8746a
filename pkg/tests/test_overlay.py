import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ksteiner import (GeometryError, UnitBall, build_odc_partition, construct_hex_frame, locate,
                      overlay_partitions, working_box)
from ksteiner.oracles import nearest_in_cone_scan
from ksteiner.overlay import build_arrangement, candidate_region_labels

from conftest import TRIANGLE

E = UnitBall.euclidean()
FE = construct_hex_frame(E)


def oodc(ball, X, frame=None, inflation=3.0):
    frame = frame or construct_hex_frame(ball)
    box = working_box(X, inflation)
    parts = [build_odc_partition(ball, frame, X, i, box) for i in range(6)]
    return overlay_partitions(parts), parts, frame


def scan_label(ball, frame, X, y):
    out = []
    for i in range(6):
        r = nearest_in_cone_scan(ball, frame, X, y, i)
        out.append(None if r is None else r)
    return out


def label_ok(ball, frame, X, label, y):
    for t, want in zip(label, scan_label(ball, frame, X, y)):
        if want is None:
            if t is not None:
                return False
        elif t is None or not math.isclose(ball.distance(X[t], y), want[1],
                                           rel_tol=1e-9, abs_tol=1e-9):
            return False
    return True


def prim_total(D):
    n = len(D)
    seen = np.zeros(n, bool)
    best = np.full(n, math.inf)
    best[0] = 0.0
    parts = []
    for _ in range(n):
        u = int(np.argmin(np.where(seen, math.inf, best)))
        parts.append(best[u])
        seen[u] = True
        best = np.minimum(best, np.where(seen, math.inf, D[u]))
    return math.fsum(parts)


def test_single_terminal():
    X = np.array([[0.0, 0.0]])
    regions, _, _ = oodc(E, X)
    labels = candidate_region_labels(regions)
    assert {t for lab, _ in labels for t in lab} <= {None, 0}
    assert len(labels) <= 7
    assert {t for lab, _ in labels for t in lab if t is not None} == {0}


def test_two_terminals_random_points(rng):
    X = np.array([[0.0, 0.0], [2.0, 0.0]])
    regions, _, _ = oodc(E, X)
    box = regions.box
    for _ in range(200):
        y = (rng.uniform(box.xmin, box.xmax), rng.uniform(box.ymin, box.ymax))
        assert label_ok(E, FE, X, locate(regions, y).label, y)


@pytest.mark.parametrize("name", ["euclidean", "rectilinear", "linf"])
def test_locate_random_points(rng, name):
    ball = UnitBall.from_spec({"type": name})
    X = rng.uniform(0, 1, (6, 2))
    regions, _, frame = oodc(ball, X)
    box = regions.box
    for _ in range(1000):
        y = (rng.uniform(box.xmin, box.xmax), rng.uniform(box.ymin, box.ymax))
        assert label_ok(ball, frame, X, locate(regions, y).label, y)


def test_representatives_and_corners(rng):
    X = rng.uniform(0, 1, (5, 2))
    regions, _, _ = oodc(E, X)
    for idx, r in enumerate(regions):
        assert locate(regions, r.representative) is r or locate(regions, r.representative).label == r.label
        assert len(r.terminals) <= 6
        assert label_ok(E, FE, X, r.label, r.representative)
    for c in regions.box.corners:
        locate(regions, c)
    with pytest.raises(GeometryError):
        locate(regions, (regions.box.xmax + 1.0, 0.0))


def test_faces_tile_box_and_euler(rng):
    for ball in (E, UnitBall.rectilinear()):
        X = rng.uniform(0, 1, (6, 2))
        regions, parts, _ = oodc(ball, X)
        assert all(r.face.area > 0 for r in regions)
        assert math.fsum(r.face.area for r in regions) == pytest.approx(regions.box.area, rel=1e-9)
        assert build_arrangement(parts).euler_ok()


def test_mismatched_partitions():
    X = np.array([[0.0, 0.0], [1.0, 0.3]])
    box = working_box(X)
    parts = [build_odc_partition(E, FE, X, i, box) for i in range(6)]
    other = build_odc_partition(E, FE, X[:1], 3, box)
    with pytest.raises(GeometryError):
        overlay_partitions(parts[:3] + [other] + parts[4:])
    with pytest.raises(GeometryError):
        overlay_partitions(parts[:5])


def test_triangle_has_full_label():
    regions, _, _ = oodc(E, TRIANGLE)
    assert any(set(lab) >= {0, 1, 2} for lab, _ in candidate_region_labels(regions))


def test_dedup_keeps_every_label(rng):
    X = rng.uniform(0, 1, (5, 2))
    regions, _, _ = oodc(E, X)
    labels = candidate_region_labels(regions)
    assert {r.label for r in regions} == {lab for lab, _ in labels}
    assert len(labels) == len({lab for lab, _ in labels})


def _restricted_vs_full(ball, frame, X, regions, s, one_per_cone=False):
    P = np.vstack([X, s])
    n = len(X)
    D = ball.pairwise(P)
    full = prim_total(D)
    lab = locate(regions, s).label
    allowed = {t for t in lab if t is not None}
    R = D.copy()
    for t in range(n):
        if t not in allowed:
            R[n, t] = R[t, n] = math.inf
    return full, prim_total(R)


def test_main_region_theorem(rng):
    for trial in range(60):
        ball = [E, UnitBall.rectilinear(), UnitBall.linf()][trial % 3]
        X = rng.uniform(0, 1, (int(rng.integers(2, 8)), 2))
        regions, _, frame = oodc(ball, X)
        for _ in range(8):
            s = rng.uniform(-0.5, 1.5, 2)
            full, restricted = _restricted_vs_full(ball, frame, X, regions, s)
            assert restricted == pytest.approx(full, abs=1e-9)


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=2, max_size=6, unique=True),
       st.tuples(st.floats(-0.5, 1.5), st.floats(-0.5, 1.5)))
def test_cone_lemma_one_neighbour_per_cone(pts, s):
    """Joining s only to the cone-nearest terminals (at most one per cone) is enough."""
    X = np.array(pts)
    if len(np.unique(X, axis=0)) < len(X):
        return
    idx = [r[0] for r in (nearest_in_cone_scan(E, FE, X, s, i) for i in range(6)) if r]
    P = np.vstack([X, s])
    D = E.pairwise(P)
    R = D.copy()
    n = len(X)
    for t in range(n):
        if t not in idx:
            R[n, t] = R[t, n] = math.inf
    assert prim_total(R) == pytest.approx(prim_total(D), abs=1e-9)


def test_region_count_quadratic_growth():
    rng = np.random.default_rng(7)
    counts = []
    ns = [4, 8, 16]
    for n in ns:
        c = [len(oodc(E, rng.uniform(0, 1, (n, 2)))[0]) for _ in range(2)]
        counts.append(np.mean(c))
    slope = np.polyfit(np.log(ns), np.log(counts), 1)[0]
    assert slope <= 2.3
