import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ksteiner import CostFunction, ToleranceNotReached, TopologyInstance, UnitBall, solve_fixed_topology
from ksteiner.topology import NegativeLengthError, evaluate_cost
from ksteiner import kernels

from conftest import SQUARE, TRIANGLE

E = UnitBall.euclidean()
R = UnitBall.rectilinear()


def star(A, ball=E):
    A = np.asarray(A, float)
    return TopologyInstance(A, 1, [(a, len(A)) for a in range(len(A))], ball)


def test_evaluate_cost_examples():
    L = [1.0, 2.0, 3.0]
    assert evaluate_cost(CostFunction.sum(), L) == 6.0
    assert evaluate_cost(CostFunction.power(2), L) == 14.0
    assert evaluate_cost(CostFunction.bottleneck(), L) == 3.0
    with pytest.raises(NegativeLengthError):
        evaluate_cost(CostFunction.sum(), [1.0, -0.5])
    assert CostFunction.power(1) .p == 1.0 and CostFunction("sum", 3.0).p == 1.0


@given(st.lists(st.floats(0, 100), min_size=1, max_size=20), st.randoms(use_true_random=False))
def test_evaluate_cost_permutation(L, r):
    M = list(L)
    r.shuffle(M)
    for cf in (CostFunction.sum(), CostFunction.power(1.7), CostFunction.bottleneck()):
        assert evaluate_cost(cf, M) == pytest.approx(evaluate_cost(cf, L), rel=1e-12)


def test_cost_function_specs():
    for spec in ({"type": "sum"}, {"type": "power", "p": 2.5}, {"type": "bottleneck"}):
        assert CostFunction.from_spec(spec).to_spec() == spec
    with pytest.raises(ValueError):
        CostFunction("median")
    with pytest.raises(ValueError):
        CostFunction.power(0.0)


def test_topology_validation():
    with pytest.raises(ValueError):
        TopologyInstance(SQUARE, 1, [(0, 4), (1, 4)], E)  # not spanning
    with pytest.raises(ValueError):
        TopologyInstance(SQUARE[:2], 1, [(0, 2), (0, 1)], E)  # leaf steiner
    with pytest.raises(ValueError):
        TopologyInstance(SQUARE[:3], 1, [(0, 3), (1, 3), (0, 1)], E)  # wrong count / cycle
    with pytest.raises(ValueError):
        solve_fixed_topology(star(TRIANGLE), CostFunction.sum(), tol=0.0)


def test_fermat_point_triangle():
    pl = solve_fixed_topology(star(TRIANGLE), CostFunction.sum())
    assert pl.cost == pytest.approx(math.sqrt(3), abs=1e-9)
    assert np.allclose(pl.steiner[0], TRIANGLE.mean(axis=0), atol=1e-6)


def test_square_star():
    pl = solve_fixed_topology(star(SQUARE), CostFunction.sum())
    assert pl.cost == pytest.approx(2 * math.sqrt(2), abs=1e-9)
    assert np.allclose(pl.steiner[0], (0.5, 0.5), atol=1e-6)


def test_power2_centroid(rng):
    A = rng.normal(size=(5, 2))
    pl = solve_fixed_topology(star(A), CostFunction.power(2))
    c = A.mean(axis=0)
    assert pl.method == "laplacian"
    assert np.allclose(pl.steiner[0], c, atol=1e-12)
    assert pl.cost == pytest.approx(((A - c) ** 2).sum(), rel=1e-12)


@pytest.mark.parametrize("ball", [E, R, UnitBall.linf(), UnitBall.ellipse([[3, 1], [1, 2]])])
def test_bottleneck_path_halves(ball):
    A = np.array([[0.0, 0.0], [2.0, 1.0]])
    inst = TopologyInstance(A, 1, [(0, 2), (1, 2)], ball)
    pl = solve_fixed_topology(inst, CostFunction.bottleneck())
    assert pl.cost == pytest.approx(ball.distance(A[0], A[1]) / 2, abs=1e-9)


def test_star_never_worse_than_nested_grid(rng):
    # costs are recomputed from real coordinates, so only the upper side can fail
    for _ in range(6):
        A = rng.uniform(0, 1, (int(rng.integers(3, 6)), 2))
        for ball in (E, R):
            for cf in (CostFunction.sum(), CostFunction.bottleneck()):
                pl = solve_fixed_topology(star(A, ball), cf)
                S = _grid_star(A, ball, cf)
                assert pl.cost <= S + 1e-9
                assert pl.cost == pytest.approx(evaluate_cost(cf, pl.lengths), rel=1e-15)


def _grid_star(A, ball, cf):
    lo, hi = A.min(0), A.max(0)
    c, h = (lo + hi) / 2, (hi - lo) / 2 + 1e-3
    best = math.inf
    for _ in range(12):
        g = np.linspace(-1, 1, 41)
        S = np.stack(np.meshgrid(c[0] + g * h[0], c[1] + g * h[1]), -1).reshape(-1, 2)
        L = ball.norm((S[:, None, :] - A[None, :, :]).reshape(-1, 2)).reshape(len(S), len(A))
        v = L.max(1) if cf.kind == "bottleneck" else L.sum(1)
        j = int(np.argmin(v))
        best = min(best, float(v[j]))
        c, h = S[j], h / 5
    return best


def test_two_steiner_full_topology_square():
    # the classical two-point Steiner tree of the unit square costs 1 + sqrt 3
    inst = TopologyInstance(SQUARE, 2, [(0, 4), (3, 4), (1, 5), (2, 5), (4, 5)], E)
    pl = solve_fixed_topology(inst, CostFunction.sum())
    assert pl.cost == pytest.approx(1 + math.sqrt(3), abs=1e-9)


def _objective(inst, cf, S):
    return evaluate_cost(cf, inst.lengths(S))


def test_convexity_midpoint(rng):
    for _ in range(30):
        A = rng.uniform(0, 1, (4, 2))
        inst = TopologyInstance(A, 2, [(0, 4), (1, 4), (2, 5), (3, 5), (4, 5)],
                                [E, R, UnitBall.linf()][int(rng.integers(3))])
        for cf in (CostFunction.sum(), CostFunction.power(1.5), CostFunction.bottleneck()):
            u, v = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
            f = _objective(inst, cf, (u + v) / 2)
            assert f <= (_objective(inst, cf, u) + _objective(inst, cf, v)) / 2 + 1e-12


def test_deterministic(rng):
    A = rng.uniform(0, 1, (5, 2))
    inst = TopologyInstance(A, 2, [(0, 5), (1, 5), (2, 6), (3, 6), (4, 6), (5, 6)], R)
    a = solve_fixed_topology(inst, CostFunction.power(1.5))
    b = solve_fixed_topology(inst, CostFunction.power(1.5))
    assert np.array_equal(a.steiner, b.steiner) and a.cost == b.cost


def test_tolerance_failure_is_raised():
    A = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ToleranceNotReached):
        solve_fixed_topology(star(A), CostFunction.power(1.5), max_evals=3)


def test_concave_power_is_flagged():
    pl = solve_fixed_topology(star(SQUARE), CostFunction.power(0.5))
    assert not pl.guaranteed
    # a steiner point on a corner: edges 0, 1, 1 and sqrt 2
    assert pl.cost <= 2.0 + 2 ** 0.25 + 1e-9


def test_laplacian_ignores_q():
    A = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    inst = TopologyInstance(A, 1, [(0, 3), (1, 3), (2, 3)], UnitBall.ellipse([[4, 1], [1, 1]]))
    pl = solve_fixed_topology(inst, CostFunction.power(2))
    assert np.allclose(pl.steiner[0], A.mean(0))


def test_exact_objective_kernel(rng):
    A = rng.uniform(0, 1, (4, 2))
    inst = TopologyInstance(A, 1, [(a, 4) for a in range(4)], R)
    S = rng.uniform(0, 1, (1, 2))
    for cf in (CostFunction.sum(), CostFunction.power(2.0), CostFunction.bottleneck()):
        got = kernels.exact_objective(S, A, inst.eu, inst.ev, *R.kernel_args, cf.agg, cf.exponent)
        assert got == pytest.approx(_objective(inst, cf, S), rel=1e-12)
