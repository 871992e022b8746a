import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ksteiner import (CostFunction, ProblemSpec, UnitBall, build_mst, construct_hex_frame,
                      build_odc_partition, grid_steiner_oracle, overlay_partitions, solve, working_box)
from ksteiner.overlay import candidate_region_labels
from ksteiner.solver import (_canon, _label_set, build_candidate_graph, down_closure,
                             enumerate_components, enumerate_viable_subforests)
from ksteiner.topology import evaluate_cost

from conftest import SQUARE, TRIANGLE

E = UnitBall.euclidean()
R = UnitBall.rectilinear()


def _spec(X, ball=E, k=1, cf=None, **kw):
    return ProblemSpec(np.asarray(X, float), ball, k=k, cf=cf or CostFunction.sum(), **kw)


# -- candidate graphs -------------------------------------------------------

def test_candidate_graph_examples():
    g = build_candidate_graph([(0, 1, 2, None, None, None)])
    assert g.terminals == [0, 1, 2] and g.k == 1 and g.ss == [] and len(g.st) == 3
    g = build_candidate_graph([frozenset(range(6)), frozenset(range(6, 12))])
    assert len(g.terminals) == 12 and g.ss == [(0, 1)] and len(g.st) == 12
    g = build_candidate_graph([frozenset({0, 1}), frozenset({1, 2})])
    assert g.terminals == [0, 1, 2]


@pytest.mark.parametrize("c", [2, 3, 4, 5, 6, 7])
def test_single_steiner_forest_count(c):
    g = build_candidate_graph([frozenset(range(c))])
    got = list(enumerate_viable_subforests(g, 1))
    want = sum(math.comb(c, j) for j in range(2, min(c, 6) + 1))
    assert len(got) == want == len(set(got))


def test_two_steiner_path():
    g = build_candidate_graph([frozenset({0}), frozenset({1})])
    got = list(enumerate_viable_subforests(g, 2))
    assert got == [(((0, 1),), ((0, 0), (1, 1)))]
    with pytest.raises(ValueError):
        list(enumerate_viable_subforests(g, 1))


def _literal_components(labels, j):
    """Connected viable subforests over every multiset of j labels, canonicalised."""
    out = set()
    for combo in itertools.combinations_with_replacement(labels, j):
        g = build_candidate_graph(list(combo))
        for ss, st_ in enumerate_viable_subforests(g, j):
            if len(ss) != j - 1:
                continue
            masks = [0] * j
            for s, t in st_:
                masks[s] |= 1 << t
            out.add(_canon(j, ss, masks))
    return out


@pytest.mark.parametrize("name,n", [("euclidean", 4), ("rectilinear", 4), ("euclidean", 5)])
def test_component_enumeration_equals_label_multisets(rng, name, n):
    ball = UnitBall.from_spec({"type": name})
    X = rng.uniform(0, 1, (n, 2))
    f = construct_hex_frame(ball)
    box = working_box(X)
    regions = overlay_partitions([build_odc_partition(ball, f, X, i, box) for i in range(6)])
    labels = sorted({_label_set(lab) for lab, _ in candidate_region_labels(regions)}, key=sorted)
    D = down_closure(labels)
    for j in (1, 2):
        assert set(enumerate_components(D, j)) == _literal_components(labels, j)


# -- pinned solutions --------------------------------------------------------

def test_square_euclidean():
    sol = solve(_spec(SQUARE))
    assert sol.cost == pytest.approx(2 * math.sqrt(2), abs=1e-9)
    assert len(sol.steiner) == 1 and sol.steiner_degrees() == [4]
    assert np.allclose(sol.steiner[0], (0.5, 0.5), atol=1e-6)


def test_square_rectilinear_uses_no_steiner():
    sol = solve(_spec(SQUARE, R))
    assert sol.cost == pytest.approx(3.0, abs=1e-12) and len(sol.steiner) == 0


def test_triangle():
    sol = solve(_spec(TRIANGLE))
    assert sol.cost == pytest.approx(math.sqrt(3), abs=1e-9)
    assert np.allclose(sol.steiner[0], TRIANGLE.mean(0), atol=1e-6)


def test_square_two_steiner():
    sol = solve(_spec(SQUARE, k=2))
    assert sol.cost == pytest.approx(1 + math.sqrt(3), abs=1e-9)
    assert sorted(sol.steiner_degrees()) == [3, 3]


def test_bottleneck_halves_long_edge():
    X = [[0, 0], [2, 0], [0, -1], [2, -1]]
    sol = solve(_spec(X, cf=CostFunction.bottleneck()))
    assert sol.cost == pytest.approx(1.0, abs=1e-9)
    two = solve(_spec([[0, 0], [2, 0]], cf=CostFunction.bottleneck()))
    assert two.cost == pytest.approx(1.0, abs=1e-9) and len(two.steiner) == 1


def test_single_terminal_and_duplicates():
    one = solve(_spec([[3, 4]]))
    assert one.cost == 0.0 and one.edges == [] and len(one.steiner) == 0
    dup = solve(_spec([[0, 0], [1, 0], [1, 1], [0, 1], [1, 0]]))
    assert dup.cost == pytest.approx(2 * math.sqrt(2), abs=1e-9)
    assert (("t", 1), ("t", 4)) in dup.edges
    assert len(dup.edges) == 5 + len(dup.steiner) - 1


def test_spec_validation():
    with pytest.raises(ValueError):
        _spec(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        _spec(SQUARE, k=0)
    with pytest.raises(ValueError):
        _spec([[0, math.nan]])


# -- properties --------------------------------------------------------------

def _tree_ok(sol):
    n, k = len(sol.terminals), len(sol.steiner)
    assert len(sol.edges) == n + k - 1
    parent = {}

    def find(a):
        parent.setdefault(a, a)
        while parent[a] != a:
            a = parent[a]
        return a
    for a, b in sol.edges:
        ra, rb = find(a), find(b)
        assert ra != rb
        parent[ra] = rb
    assert all(2 <= d <= 6 for d in sol.steiner_degrees())
    assert sol.recompute_cost() == pytest.approx(sol.cost, rel=1e-12, abs=1e-15)


pts = st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=2, max_size=5)


@settings(max_examples=12)
@given(pts, st.sampled_from(["euclidean", "rectilinear"]),
       st.sampled_from([CostFunction.sum(), CostFunction.bottleneck(), CostFunction.power(2.0)]))
def test_never_worse_than_mst(X, name, cf):
    ball = UnitBall.from_spec({"type": name})
    sol = solve(_spec(X, ball, cf=cf))
    _tree_ok(sol)
    T = build_mst(ball, X)
    assert sol.cost <= evaluate_cost(cf, T.lengths) + 1e-9


def test_monotone_in_k(rng):
    for _ in range(3):
        X = rng.uniform(0, 1, (5, 2))
        for cf in (CostFunction.sum(), CostFunction.bottleneck()):
            a = solve(_spec(X, cf=cf, k=1))
            b = solve(_spec(X, cf=cf, k=2))
            _tree_ok(b)
            assert b.cost <= a.cost + 1e-9


def test_matches_grid_oracle_small(rng):
    for trial in range(6):
        ball = (E, R)[trial % 2]
        cf = (CostFunction.sum(), CostFunction.bottleneck())[trial // 2 % 2]
        X = rng.uniform(0, 1, (int(rng.integers(3, 7)), 2))
        sol = solve(_spec(X, ball, cf=cf))
        orc = grid_steiner_oracle(ball, cf, X, 1)
        assert abs(sol.cost - orc.cost) <= 1e-4 * orc.cost


def test_structure_theorem_components(rng):
    """Each steiner component re-solved on its own attachment terminals costs the same."""
    for _ in range(4):
        X = rng.uniform(0, 1, (6, 2))
        sol = solve(_spec(X, k=2))
        n = len(X)
        # group steiner points and their incident edges
        comp_edges = [e for e in sol.edges if "s" in (e[0][0], e[1][0])]
        parent = {}

        def find(a):
            parent.setdefault(a, a)
            while parent[a] != a:
                a = parent[a]
            return a
        for a, b in comp_edges:
            parent[find(a)] = find(b)
        groups = {}
        for a, b in comp_edges:
            groups.setdefault(find(a), []).append((a, b))
        for edges in groups.values():
            A = sorted({i for e in edges for kind, i in e if kind == "t"})
            ks = len({i for e in edges for kind, i in e if kind == "s"})
            cost = math.fsum(sol.ball.distance(sol.node_point(a), sol.node_point(b)) for a, b in edges)
            sub = solve(_spec(X[A], k=ks))
            assert sub.cost == pytest.approx(cost, abs=1e-8)


def test_threads_do_not_change_result(rng):
    X = rng.uniform(0, 1, (7, 2))
    a = solve(_spec(X, k=2, threads=1))
    b = solve(_spec(X, k=2, threads=4))
    assert a.edges == b.edges and np.array_equal(a.steiner, b.steiner) and a.cost == b.cost


def test_progress_and_stats(rng):
    calls = []
    sol = solve(_spec(rng.uniform(0, 1, (5, 2))), progress=lambda d, t: calls.append((d, t)))
    assert calls and calls[-1][0] == calls[-1][1]
    for key in ("regions", "distinct_labels", "topologies_evaluated", "wall_ms", "warnings"):
        assert key in sol.stats
    assert sol.stats["distinct_labels"] <= sol.stats["regions"]


def test_other_norms_and_costs(rng):
    X = rng.uniform(0, 1, (5, 2))
    for ball in (UnitBall.linf(), UnitBall.ellipse([[2, 0.4], [0.4, 1]])):
        for cf in (CostFunction.sum(), CostFunction.power(1.5), CostFunction.power(2.0)):
            sol = solve(_spec(X, ball, cf=cf))
            _tree_ok(sol)
            assert sol.stats["warnings"] == 0
