import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ksteiner import UnitBall

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=15,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])


def random_polygon_ball(rng, m=None):
    """Random centrally symmetric convex polygon with 2m vertices."""
    m = m or int(rng.integers(2, 7))
    while True:
        ang = np.sort(rng.uniform(0.0, np.pi, m))
        if np.min(np.diff(np.r_[ang, ang[0] + np.pi])) < 0.05:
            continue
        r = rng.uniform(0.5, 2.0, m)
        half = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
        V = np.vstack([half, -half])
        try:
            return UnitBall.polygon(V)
        except ValueError:
            continue


def random_ellipse_ball(rng):
    A = rng.normal(size=(2, 2))
    Q = A @ A.T + 0.2 * np.eye(2)
    return UnitBall.ellipse(Q)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_forest(rng, n, max_components=3, max_steiner=4):
    """Random strictly viable forest over terminals ``0..n-1`` (disjoint attachment sets)."""
    from ksteiner import ViableForest

    total = int(rng.integers(1, max_steiner + 1))
    t = int(rng.integers(1, min(max_components, total) + 1))
    sizes = np.ones(t, dtype=int)
    for _ in range(total - t):
        sizes[rng.integers(t)] += 1
    free = list(rng.permutation(n))
    ss, st = [], []
    base = 0
    for size in sizes:
        ids = list(range(base, base + size))
        base += size
        deg = {s: 0 for s in ids}
        for j in range(1, size):
            a, b = ids[j], ids[int(rng.integers(j))]
            ss.append((min(a, b), max(a, b)))
            deg[a] += 1
            deg[b] += 1
        for s in ids:
            want = max(2 - deg[s], 0) + int(rng.integers(0, 2))
            want = min(want, 6 - deg[s])
            for _ in range(want):
                if not free:
                    return None
                st.append((s, int(free.pop())))
                deg[s] += 1
            if deg[s] < 2:
                return None
    steiner = rng.uniform(0, 1, (total, 2))
    return ViableForest(steiner, ss, st)


# one summary line per acceptance criterion, printed at the end of the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
