"""Optimal steiner coordinates for a fixed tree topology.

Three routes, picked by (cost, norm):

* power 2 under an ellipse norm: the first-order system is a graph
  Laplacian solve, exact and independent of Q;
* sum or bottleneck under a polygonal norm: a linear program;
* everything else: Newton's method on a smoothed objective whose smoothing
  is shrunk stage by stage until its worst-case gap is below ``tol``,
  followed by a compass-search polish on the exact cost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .kernels import AGG_LSE, AGG_POWER, ELLIPSE, STATUS_OK
from .norms import UnitBall


class NegativeLengthError(ValueError):
    pass


class ToleranceNotReached(RuntimeError):
    """The placement could not be certified within the requested tolerance."""


@dataclass(frozen=True)
class CostFunction:
    kind: str = "sum"
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in ("sum", "power", "bottleneck"):
            raise ValueError(f"unknown cost function {self.kind!r}")
        if self.kind == "power" and not self.p > 0:
            raise ValueError("power cost needs p > 0")
        if self.kind == "sum" and self.p != 1.0:
            object.__setattr__(self, "p", 1.0)

    @classmethod
    def sum(cls):
        return cls("sum")

    @classmethod
    def power(cls, p: float):
        return cls("power", float(p))

    @classmethod
    def bottleneck(cls):
        return cls("bottleneck")

    @classmethod
    def from_spec(cls, spec: dict) -> "CostFunction":
        t = spec.get("type")
        if t == "power":
            return cls.power(spec["p"])
        return cls(t)

    def to_spec(self) -> dict:
        if self.kind == "power":
            return {"type": "power", "p": self.p}
        return {"type": self.kind}

    @property
    def agg(self) -> int:
        return AGG_LSE if self.kind == "bottleneck" else AGG_POWER

    @property
    def exponent(self) -> float:
        return self.p if self.kind == "power" else 1.0

    @property
    def convex(self) -> bool:
        return self.kind != "power" or self.p >= 1.0

    def __call__(self, lengths) -> float:
        return evaluate_cost(self, lengths)


def evaluate_cost(cf: CostFunction, lengths) -> float:
    L = np.asarray(lengths, dtype=float).ravel()
    if np.any(L < 0):
        raise NegativeLengthError("edge lengths must be nonnegative")
    if cf.kind == "sum":
        return math.fsum(L.tolist())
    if cf.kind == "bottleneck":
        return float(L.max(initial=0.0))
    return math.fsum((L ** cf.p).tolist())


@dataclass
class TopologyInstance:
    """Tree over ``fixed`` (indices ``0..c-1``) and ``k`` free points (``c..c+k-1``)."""

    fixed: np.ndarray
    k: int
    edges: list
    ball: UnitBall

    def __post_init__(self):
        self.fixed = np.asarray(self.fixed, float).reshape(-1, 2)
        self.edges = [(int(u), int(v)) for u, v in self.edges]
        c, m = len(self.fixed), len(self.fixed) + self.k
        if len(self.edges) != m - 1:
            raise ValueError("topology must be a tree")
        parent = list(range(m))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a
        deg = np.zeros(m, dtype=int)
        for u, v in self.edges:
            if not (0 <= u < m and 0 <= v < m) or u == v:
                raise ValueError(f"bad edge ({u}, {v})")
            ru, rv = find(u), find(v)
            if ru == rv:
                raise ValueError("topology has a cycle")
            parent[ru] = rv
            deg[u] += 1
            deg[v] += 1
        if self.k and np.any(deg[c:] < 2):
            raise ValueError("every steiner point must be internal")

    @property
    def eu(self) -> np.ndarray:
        return np.array([u for u, _ in self.edges], dtype=np.int64)

    @property
    def ev(self) -> np.ndarray:
        return np.array([v for _, v in self.edges], dtype=np.int64)

    def lengths(self, S) -> np.ndarray:
        P = np.vstack([self.fixed, np.asarray(S, float).reshape(-1, 2)])
        return kernels.norm_rows(P[self.eu] - P[self.ev], *self.ball.kernel_args)


@dataclass
class Placement:
    steiner: np.ndarray
    cost: float
    lengths: np.ndarray
    method: str = ""
    guaranteed: bool = True
    evals: int = 0
    notes: list = field(default_factory=list)


def _placement(inst, cf, S, method, guaranteed=True, evals=0) -> Placement:
    L = inst.lengths(S)
    return Placement(np.asarray(S, float).reshape(-1, 2), evaluate_cost(cf, L), L,
                     method, guaranteed, evals)


def _initial(inst: TopologyInstance) -> np.ndarray:
    c = len(inst.fixed)
    S = np.zeros((inst.k, 2))
    centre = inst.fixed.mean(axis=0)
    for j in range(inst.k):
        nb = [u if v == c + j else v for u, v in inst.edges if c + j in (u, v)]
        nb = [a for a in nb if a < c]
        S[j] = inst.fixed[nb].mean(axis=0) if nb else centre
    return S


def _laplacian(inst: TopologyInstance) -> np.ndarray:
    c, k = len(inst.fixed), inst.k
    L = np.zeros((k, k))
    rhs = np.zeros((k, 2))
    for u, v in inst.edges:
        for a, b in ((u, v), (v, u)):
            if a >= c:
                L[a - c, a - c] += 1.0
                if b >= c:
                    L[a - c, b - c] -= 1.0
                else:
                    rhs[a - c] += inst.fixed[b]
    return np.linalg.solve(L, rhs)


def _lp(inst: TopologyInstance, cf: CostFunction, tol: float) -> np.ndarray:
    c, k = len(inst.fixed), inst.k
    A = np.vstack([inst.ball.normals, -inst.ball.normals])
    E = len(inst.edges)
    bottleneck = cf.kind == "bottleneck"
    nt = 1 if bottleneck else E
    nv = 2 * k + nt
    rows, rhs = [], []
    for e, (u, v) in enumerate(inst.edges):
        for a in A:
            # a.(P_u - P_v) <= t_e
            r = np.zeros(nv)
            b = 0.0
            for node, sg in ((u, 1.0), (v, -1.0)):
                if node >= c:
                    r[2 * (node - c):2 * (node - c) + 2] += sg * a
                else:
                    b -= sg * float(a @ inst.fixed[node])
            r[2 * k + (0 if bottleneck else e)] = -1.0
            rows.append(r)
            rhs.append(b)
    cost = np.zeros(nv)
    cost[2 * k:] = 1.0
    bounds = [(None, None)] * (2 * k) + [(0, None)] * nt
    res = linprog(cost, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds,
                  method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise ToleranceNotReached(f"linear program failed: {res.message}")
    return res.x[:2 * k].reshape(k, 2)


def _schedules(inst, cf, tol, scale):
    """Smoothing stages (eps, tau, decrement tolerance) ending below ``tol``."""
    E = len(inst.edges)
    ball = inst.ball
    if ball.kind == ELLIPSE:
        per_eps = 1.0
    else:
        per_eps = math.log(2 * len(ball.normals))
    if cf.kind == "bottleneck":
        eps_f = tol / (4.0 * per_eps)
        tau_f = tol / (4.0 * math.log(max(E, 2)))
    else:
        p = cf.exponent
        if p >= 1.0:
            eps_f = tol / (2.0 * E * per_eps * p * max(2.0 * scale, 1.0) ** (p - 1.0))
        else:
            eps_f = (tol / (2.0 * E)) ** (1.0 / p) / per_eps
        tau_f = 1.0
    eps_s, tau_s = [], []
    e, t = 0.1 * scale, 0.1 * scale
    while True:
        eps_s.append(max(e, eps_f))
        tau_s.append(max(t, tau_f) if cf.kind == "bottleneck" else 1.0)
        if e <= eps_f and (cf.kind != "bottleneck" or t <= tau_f):
            break
        e /= 10.0
        t /= 10.0
    dec_s = [max(tol / 2.0, 1e-3 * min(a, b) if cf.kind == "bottleneck" else 1e-3 * a * E)
             for a, b in zip(eps_s, tau_s)]
    dec_s[-1] = tol / 2.0
    return np.array(eps_s), np.array(tau_s), np.array(dec_s)


def _newton(inst, cf, tol, x0, max_evals):
    scale = max(float(np.ptp(inst.fixed, axis=0).max()), 1e-12)
    eps_s, tau_s, dec_s = _schedules(inst, cf, tol, scale)
    Q = inst.ball.Q
    H = inst.ball.normals
    x, status, evals = kernels.newton_homotopy(
        x0, inst.fixed, inst.eu, inst.ev, inst.ball.kind, Q, H, cf.agg,
        cf.exponent, eps_s, tau_s, dec_s, max_iter=200, max_evals=max_evals)
    x, _, pe = kernels.pattern_polish(x, inst.fixed, inst.eu, inst.ev, inst.ball.kind,
                                      Q, H, cf.agg, cf.exponent, 1e-3 * scale,
                                      1e-14 * max(scale, 1.0),
                                      max_evals=max(1, min(20000, max_evals - evals)))
    return x, status, evals + pe


def solve_fixed_topology(inst: TopologyInstance, cf: CostFunction, tol: float = 1e-9,
                         max_evals: int = 10 ** 6, seed: int = 0) -> Placement:
    """Steiner coordinates whose cost is within ``tol`` of the topology's infimum."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    if inst.k == 0:
        return _placement(inst, cf, np.zeros((0, 2)), "none")
    if cf.kind == "power" and cf.p == 2.0 and inst.ball.kind == ELLIPSE:
        return _placement(inst, cf, _laplacian(inst), "laplacian")
    x0 = _initial(inst)
    if inst.ball.is_polygon and cf.kind in ("sum", "bottleneck"):
        S = _lp(inst, cf, tol)
        scale = max(float(np.ptp(inst.fixed, axis=0).max()), 1e-12)
        S, _, ev = kernels.pattern_polish(S, inst.fixed, inst.eu, inst.ev, inst.ball.kind,
                                          inst.ball.Q, inst.ball.normals, cf.agg, 1.0,
                                          1e-9 * scale, 1e-15 * max(scale, 1.0), 2000)
        return _placement(inst, cf, S, "lp", evals=ev)
    if cf.convex:
        x, status, evals = _newton(inst, cf, tol, x0, max_evals)
        if status != STATUS_OK:
            raise ToleranceNotReached(
                f"smoothed Newton stopped with status {status} after {evals} evaluations")
        return _placement(inst, cf, x, "newton", evals=evals)
    # p < 1: non-convex, best of several starts, no optimality guarantee
    rng = np.random.default_rng(seed)
    scale = max(float(np.ptp(inst.fixed, axis=0).max()), 1e-12)
    starts = [x0] + [x0 + 0.25 * scale * rng.standard_normal(x0.shape) for _ in range(4)]
    # concave costs like to collapse steiner points onto terminals
    for a in range(len(inst.fixed)):
        starts.append(np.where(np.arange(inst.k)[:, None] == 0, inst.fixed[a], x0))
    best = None
    total = 0
    for s in starts:
        x, status, evals = _newton(inst, cf, tol, s, max_evals)
        # smoothing pulls points off terminals, where concave costs have cusps,
        # so the start itself is polished and kept as a candidate too
        y, _, pe = kernels.pattern_polish(s, inst.fixed, inst.eu, inst.ev, inst.ball.kind,
                                          inst.ball.Q, inst.ball.normals, cf.agg, cf.exponent,
                                          1e-3 * scale, 1e-14 * max(scale, 1.0), 20000)
        total += evals + pe
        for z in (x, y):
            pl = _placement(inst, cf, z, "multistart", guaranteed=False, evals=total)
            if best is None or pl.cost < best.cost:
                best = pl
    best.evals = total
    return best
