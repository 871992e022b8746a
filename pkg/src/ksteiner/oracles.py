"""Brute-force reference implementations.

Nothing here uses the main pipeline's geometry: distances come from the
ball's norm alone, spanning trees from Prüfer enumeration or a separate
batched Prim, and cone membership from a direct cross-product scan.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .mst import SpanningTree, UpdatedTree
from .norms import HexFrame, UnitBall, norm_distance


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    coarse: int = 41
    levels: int = 9
    shrink: float = 5.0
    beam: int = 6
    k2_coarse: int = 21
    k2_levels: int = 7
    max_n: int = 7
    max_k: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.shrink <= 1.0 or self.levels < 0 or self.coarse < 3:
            raise ValueError("grid schedule must strictly refine")


# --------------------------------------------------------------------------
# spanning trees
# --------------------------------------------------------------------------

def _dist_matrix(ball: UnitBall, P) -> np.ndarray:
    n = len(P)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = norm_distance(ball, P[i], P[j])
    return D


def _prufer_edges(n: int) -> np.ndarray:
    """All ``n**(n-2)`` labelled trees as an ``(N, n-1, 2)`` edge array."""
    seqs = np.array(list(itertools.product(range(n), repeat=n - 2)), dtype=np.int64)
    seqs = seqs.reshape(-1, n - 2)
    N = len(seqs)
    deg = np.ones((N, n), dtype=np.int64)
    for j in range(n - 2):
        np.add.at(deg, (np.arange(N), seqs[:, j]), 1)
    edges = np.empty((N, n - 1, 2), dtype=np.int64)
    rows = np.arange(N)
    big = n + 1
    for j in range(n - 2):
        leaf = np.argmin(np.where(deg == 1, np.arange(n), big), axis=1)
        edges[:, j, 0] = leaf
        edges[:, j, 1] = seqs[:, j]
        deg[rows, leaf] -= 1
        deg[rows, seqs[:, j]] -= 1
    last = np.argsort(np.where(deg == 1, np.arange(n), big), axis=1)[:, :2]
    edges[:, n - 2] = last
    return edges


def brute_mst(ball: UnitBall, points) -> SpanningTree:
    """Exact MST by enumerating every labelled spanning tree (n <= 8)."""
    P = np.asarray(points, float).reshape(-1, 2)
    n = len(P)
    if n == 0:
        raise OracleSizeError("no points")
    if n > 8:
        raise OracleSizeError(f"brute_mst is capped at 8 points, got {n}")
    if n == 1:
        return SpanningTree(P, np.zeros((0, 2), int), np.zeros(0), ball)
    D = _dist_matrix(ball, P)
    if n == 2:
        E = np.array([[0, 1]])
    else:
        trees = _prufer_edges(n)
        tot = D[trees[..., 0], trees[..., 1]].sum(axis=1)
        E = trees[int(np.argmin(tot))]
    E = np.sort(E, axis=1)
    return SpanningTree(P, E, D[E[:, 0], E[:, 1]], ball)


def _aggregate(cf, L: np.ndarray) -> np.ndarray:
    kind = cf.kind
    if kind == "sum":
        return L.sum(axis=-1)
    if kind == "bottleneck":
        return L.max(axis=-1, initial=0.0)
    return (L ** cf.p).sum(axis=-1)


def _batch_mst_cost(ball: UnitBall, cf, P: np.ndarray) -> np.ndarray:
    """α-cost of the MST of every point set ``P[b]`` (shape ``(B, m, 2)``)."""
    B, m, _ = P.shape
    if m <= 1:
        return np.zeros(B)
    D = ball.norm(P[:, :, None, :] - P[:, None, :, :])
    rows = np.arange(B)
    in_tree = np.zeros((B, m), dtype=bool)
    in_tree[:, 0] = True
    best = D[:, 0].copy()
    best[:, 0] = np.inf
    L = np.empty((B, m - 1))
    for step in range(m - 1):
        cand = np.where(in_tree, np.inf, best)
        pick = np.argmin(cand, axis=1)
        L[:, step] = cand[rows, pick]
        in_tree[rows, pick] = True
        best = np.minimum(best, D[rows, pick])
    return _aggregate(cf, L)


# --------------------------------------------------------------------------
# grid search
# --------------------------------------------------------------------------

def _oracle_box(X: np.ndarray, inflation: float = 3.0):
    diam = max((math.dist(a, b) for a, b in itertools.combinations(X, 2)), default=0.0)
    m = inflation * diam + 1.0
    return X.min(axis=0) - m, X.max(axis=0) + m


def _lattice(center, half, g):
    t = np.linspace(-1.0, 1.0, g)
    gx, gy = np.meshgrid(center[0] + half[0] * t, center[1] + half[1] * t, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def _eval_single(ball, cf, X, S):
    P = np.concatenate([np.broadcast_to(X, (len(S),) + X.shape), S[:, None, :]], axis=1)
    return _batch_mst_cost(ball, cf, P)


def _eval_pairs(ball, cf, X, S1, S2, chunk=20000):
    out = np.empty(len(S1))
    for a in range(0, len(S1), chunk):
        b = min(a + chunk, len(S1))
        P = np.concatenate([np.broadcast_to(X, (b - a,) + X.shape),
                            S1[a:b, None, :], S2[a:b, None, :]], axis=1)
        out[a:b] = _batch_mst_cost(ball, cf, P)
    return out


def _local_minima(vals: np.ndarray, g: int, count: int) -> list[int]:
    V = vals.reshape(g, g)
    pad = np.pad(V, 1, constant_values=np.inf)
    nb = np.min(np.stack([pad[1 + dx:g + 1 + dx, 1 + dy:g + 1 + dy]
                          for dx in (-1, 0, 1) for dy in (-1, 0, 1) if dx or dy]), axis=0)
    idx = np.flatnonzero((V <= nb).ravel())
    idx = idx[np.argsort(vals[idx], kind="stable")]
    return idx[:count].tolist()


def _refine1(ball, cf, X, center, half, cfg) -> tuple[float, np.ndarray, float]:
    g = cfg.coarse
    best_v, best_s = math.inf, center
    for _ in range(cfg.levels):
        S = _lattice(center, half, g)
        v = _eval_single(ball, cf, X, S)
        j = int(np.argmin(v))
        if v[j] < best_v:
            best_v, best_s = float(v[j]), S[j]
        center = best_s
        half = half / cfg.shrink
    return best_v, best_s, float(np.hypot(*half)) * cfg.shrink * 2.0 / (g - 1)


@dataclass
class OracleResult:
    cost: float
    bound: float
    steiner: np.ndarray

    def __float__(self):
        return self.cost


def _norm_constant(ball: UnitBall) -> float:
    t = np.linspace(0.0, 2 * math.pi, 720, endpoint=False)
    return float(ball.norm(np.stack([np.cos(t), np.sin(t)], axis=1)).max())


def grid_steiner_oracle(ball: UnitBall, cf, X, k: int, config: OracleConfig | None = None) -> OracleResult:
    """Nested grid search over up to k steiner points; cost of the MST of X ∪ S."""
    cfg = config or OracleConfig()
    X = np.asarray(X, float).reshape(-1, 2)
    n = len(X)
    if n > cfg.max_n or k > cfg.max_k:
        raise OracleSizeError(f"grid oracle capped at n<={cfg.max_n}, k<={cfg.max_k}")
    base = brute_mst(ball, X)
    best = OracleResult(float(_aggregate(cf, base.lengths[None, :])[0]), 0.0, np.zeros((0, 2)))
    if k == 0 or n < 2:
        return best
    lip = 6.0 * _norm_constant(ball)
    lo, hi = _oracle_box(X)
    # k = 1: coarse box grid plus a fine grid over the terminals' hull box
    starts = []
    c0, h0 = (lo + hi) / 2, (hi - lo) / 2
    S0 = _lattice(c0, h0, cfg.coarse)
    v0 = _eval_single(ball, cf, X, S0)
    starts += [(S0[j], h0 * 2 / (cfg.coarse - 1)) for j in _local_minima(v0, cfg.coarse, cfg.beam)]
    xlo, xhi = X.min(axis=0), X.max(axis=0)
    dmin = min(math.dist(a, b) for a, b in itertools.combinations(X, 2))
    span = np.maximum(xhi - xlo, 1e-12)
    g = int(min(241, max(cfg.coarse, math.ceil(span.max() / max(dmin / 4, 1e-12)) + 1)))
    S1 = _lattice((xlo + xhi) / 2, span / 2, g)
    v1 = _eval_single(ball, cf, X, S1)
    starts += [(S1[j], span / (g - 1)) for j in _local_minima(v1, g, cfg.beam)]
    one = best
    for s, h in starts:
        v, sbest, res = _refine1(ball, cf, X, np.asarray(s, float), np.asarray(h, float) * 2, cfg)
        if v < one.cost:
            one = OracleResult(v, lip * res / 2, sbest[None, :])
    if k == 1:
        return one
    two = _two_point(ball, cf, X, lo, hi, cfg, lip)
    return two if two.cost < one.cost else one


def _two_point(ball, cf, X, lo, hi, cfg, lip) -> OracleResult:
    g = cfg.k2_coarse
    xlo, xhi = X.min(axis=0), X.max(axis=0)
    pad = 0.25 * max(float((xhi - xlo).max()), 1e-9)
    center, half = (xlo + xhi) / 2, (xhi - xlo) / 2 + pad
    best_v, best = math.inf, None
    lat = _lattice(center, half, g)
    a, b = np.triu_indices(len(lat))
    v = _eval_pairs(ball, cf, X, lat[a], lat[b])
    order = np.argsort(v, kind="stable")[: cfg.beam]
    res = 0.0
    for j in order:
        c1, c2 = lat[a[j]], lat[b[j]]
        h = half * 2 / (g - 1) * 2
        for _ in range(cfg.k2_levels):
            l1 = _lattice(c1, h, 9)
            l2 = _lattice(c2, h, 9)
            i1, i2 = np.meshgrid(np.arange(len(l1)), np.arange(len(l2)), indexing="ij")
            vv = _eval_pairs(ball, cf, X, l1[i1.ravel()], l2[i2.ravel()])
            m = int(np.argmin(vv))
            c1, c2 = l1[i1.ravel()[m]], l2[i2.ravel()[m]]
            if vv[m] < best_v:
                best_v, best = float(vv[m]), np.array([c1, c2])
            h = h / 4.0
        res = max(res, float(np.hypot(*h)) * 4.0 * 2 / 8)
    return OracleResult(best_v, lip * res, best)


# --------------------------------------------------------------------------
# F-MST and cone oracles
# --------------------------------------------------------------------------

def fmst_contraction_oracle(T: SpanningTree, F) -> float:
    """Minimum F-fixed spanning length by contracting each component of F.

    Terminal pairs inside one attachment set get weight 0; Kruskal on the
    complete terminal graph then adds F's own edges.
    """
    ball = T.ball
    P = T.points
    n = len(P)
    comp = {}
    for ci, (_, A) in enumerate(F.components()):
        for t in A:
            comp[t] = ci
    cand = []
    for u in range(n):
        for v in range(u + 1, n):
            if u in comp and v in comp and comp[u] == comp[v]:
                cand.append((0.0, u, v, 0.0))
            else:
                d = norm_distance(ball, P[u], P[v])
                cand.append((d, u, v, d))
    cand.sort()
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a
    picked = []
    for w, u, v, d in cand:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            if w > 0.0 or not (u in comp and v in comp and comp[u] == comp[v]):
                picked.append(d)
    Sp = F.steiner
    for a, b in F.ss:
        lo_, hi_ = min(a, b), max(a, b)
        picked.append(norm_distance(ball, Sp[lo_], Sp[hi_]))
    for s, t in F.st:
        picked.append(norm_distance(ball, P[t], Sp[s]))
    return math.fsum(picked)


def nearest_in_cone_scan(ball: UnitBall, frame: HexFrame, X, y, i: int):
    """Linear scan for the closest terminal in K(y, θ_i, θ_{i+1}); ties to the lowest index."""
    pts = np.asarray(frame.points, float)
    a, b = pts[i % 6], pts[(i + 1) % 6]
    y = np.asarray(y, float)
    best = None
    for j, x in enumerate(np.asarray(X, float).reshape(-1, 2)):
        v = x - y
        r = math.hypot(v[0], v[1])
        if r > 0.0:
            ca = a[0] * v[1] - a[1] * v[0]
            cb = v[0] * b[1] - v[1] * b[0]
            if ca < -1e-12 * r * math.hypot(*a) or cb < -1e-12 * r * math.hypot(*b):
                continue
        d = norm_distance(ball, y, x)
        if best is None or d < best[1]:
            best = (j, d)
    return best
