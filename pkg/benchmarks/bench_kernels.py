"""Compare the numba kernels with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both paths are timed in one process by flipping ``ksteiner._accel.USE_NUMBA``
(the dispatchers read it on every call).  Each kernel is called once before
timing so JIT compilation is not counted.  Outputs are compared as well.
"""
import argparse
import time

import numpy as np

from ksteiner import _accel, kernels
from ksteiner.mst import build_mst, preprocess_pp1
from ksteiner.norms import UnitBall, construct_hex_frame
from ksteiner.solver import ProblemSpec, solve
from ksteiner.topology import CostFunction, TopologyInstance, _schedules


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    ball = UnitBall.euclidean()
    rect = UnitBall.rectilinear()
    P = rng.uniform(0, 1, (400, 2))
    frame = construct_hex_frame(ball)
    dirs = frame.points
    Y = rng.uniform(-1, 2, (20000, 2))
    D = ball.pairwise(P)
    T = build_mst(ball, P)
    star = TopologyInstance(rng.uniform(0, 1, (6, 2)), 1, [(a, 6) for a in range(6)], rect)
    cf = CostFunction.sum()
    eps_s, tau_s, dec_s = _schedules(star, cf, 1e-9, 1.0)
    x0 = star.fixed.mean(axis=0)[None, :]
    small = ProblemSpec(rng.uniform(0, 1, (10, 2)), ball, k=1)
    return {
        "pairwise_norm 400 pts": lambda: kernels.pairwise_norm(P, *ball.kernel_args),
        "cone_nearest 400x20000": lambda: kernels.cone_nearest(P, Y, dirs, *ball.kernel_args),
        "prim_edges n=400": lambda: kernels.prim_edges(D),
        "pp1 table n=400": lambda: preprocess_pp1(T),
        "newton star c=6 rectilinear": lambda: kernels.newton_homotopy(
            x0, star.fixed, star.eu, star.ev, *rect.kernel_args, cf.agg, 1.0,
            eps_s, tau_s, dec_s),
        "solve n=10 k=1": lambda: solve(small),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':32s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        _accel.USE_NUMBA = True
        t_nb = best_of(fn, args.repeat)
        out_nb = fn()
        _accel.USE_NUMBA = False
        t_np = best_of(fn, args.repeat)
        out_np = fn()
        _accel.USE_NUMBA = True
        same = _agree(out_nb, out_np)
        print(f"{name:32s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}"
              + ("" if same else "  (outputs differ)"))


def _agree(a, b):
    if hasattr(a, "cost"):
        return abs(a.cost - b.cost) <= 1e-9 * max(1.0, abs(a.cost))
    if hasattr(a, "edge"):
        return np.array_equal(a.edge, b.edge)
    if isinstance(a, tuple):
        return all(_agree(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.shape == b.shape and np.allclose(a, b, rtol=1e-9, atol=1e-12)
    return a == b


if __name__ == "__main__":
    main()
