"""Normed-plane geometry: unit balls, distances, boundary intersections,
the six-point hexagon frame and its cones."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .kernels import ELLIPSE, POLYGON

EPS = 1e-9


class GeometryError(ValueError):
    """Invalid geometric input (bad ball, degenerate line, ...)."""


def as_point(p) -> np.ndarray:
    a = np.asarray(p, dtype=float).reshape(2)
    if not np.all(np.isfinite(a)):
        raise GeometryError(f"non-finite coordinate {p!r}")
    return a


def _cross(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


@dataclass(frozen=True, eq=False)
class UnitBall:
    """Unit ball of a planar norm: a centrally symmetric polygon or an ellipse.

    Build with :meth:`polygon`, :meth:`ellipse` or :meth:`from_spec`; the raw
    constructor does not validate.
    """

    kind: int
    vertices: np.ndarray | None = None  # polygon, counter-clockwise
    Q: np.ndarray = field(default_factory=lambda: np.eye(2))
    normals: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    spec: dict = field(default_factory=dict)

    # -- construction ------------------------------------------------------
    @classmethod
    def ellipse(cls, Q, spec=None) -> "UnitBall":
        Q = np.asarray(Q, dtype=float).reshape(2, 2)
        if not np.all(np.isfinite(Q)):
            raise GeometryError("ellipse matrix has non-finite entries")
        if abs(Q[0, 1] - Q[1, 0]) > 1e-12 * max(1.0, np.abs(Q).max()):
            raise GeometryError("ellipse matrix must be symmetric")
        Q = 0.5 * (Q + Q.T)
        if np.linalg.eigvalsh(Q).min() <= 0.0:
            raise GeometryError("ellipse matrix must be positive definite")
        spec = spec or {"type": "ellipse", "Q": Q.tolist()}
        return cls(ELLIPSE, None, Q, np.zeros((0, 2)), spec)

    @classmethod
    def polygon(cls, vertices, spec=None) -> "UnitBall":
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2 or not np.all(np.isfinite(V)):
            raise GeometryError("polygon vertices must be finite (x, y) pairs")
        m = len(V)
        if m < 4 or m % 2:
            raise GeometryError("a centrally symmetric polygon needs an even number >= 4 of vertices")
        scale = np.abs(V).max()
        for j in range(m):
            a, b, c = V[j - 1], V[j], V[(j + 1) % m]
            if _cross(b - a, c - b) <= 1e-12 * scale * scale:
                raise GeometryError("polygon must be strictly convex and counter-clockwise")
        for j in range(m):
            if _cross(V[j], V[(j + 1) % m]) <= 0.0:
                raise GeometryError("polygon must contain the origin in its interior")
        half = m // 2
        if np.abs(V[half:] + V[:half]).max() > 1e-9 * scale:
            raise GeometryError("polygon must be centrally symmetric (v vertex => -v vertex)")
        V = np.vstack([V[:half], -V[:half]])
        normals = np.empty((half, 2))
        for j in range(half):
            a, b = V[j], V[j + 1]
            normals[j] = np.linalg.solve(np.array([a, b]), np.ones(2))
        spec = spec or {"type": "polygon", "vertices": V.tolist()}
        return cls(POLYGON, V, np.eye(2), normals, spec)

    @classmethod
    def euclidean(cls) -> "UnitBall":
        return cls.ellipse(np.eye(2), {"type": "euclidean"})

    @classmethod
    def rectilinear(cls) -> "UnitBall":
        return cls.polygon([[1, 0], [0, 1], [-1, 0], [0, -1]], {"type": "rectilinear"})

    @classmethod
    def linf(cls) -> "UnitBall":
        return cls.polygon([[1, -1], [1, 1], [-1, 1], [-1, -1]], {"type": "linf"})

    @classmethod
    def from_spec(cls, spec: dict) -> "UnitBall":
        """Parse a norm object such as ``{"type": "euclidean"}``."""
        kind = spec.get("type")
        if kind == "euclidean":
            return cls.euclidean()
        if kind == "rectilinear":
            return cls.rectilinear()
        if kind == "linf":
            return cls.linf()
        if kind == "polygon":
            return cls.polygon(spec["vertices"], dict(spec))
        if kind == "ellipse":
            return cls.ellipse(spec["Q"], dict(spec))
        raise GeometryError(f"unknown norm type {kind!r}")

    # -- evaluation --------------------------------------------------------
    @property
    def is_polygon(self) -> bool:
        return self.kind == POLYGON

    @property
    def kernel_args(self):
        return self.kind, self.Q, self.normals

    def norm(self, v) -> np.ndarray | float:
        v = np.asarray(v, dtype=float)
        out = kernels.norm_rows(v, self.kind, self.Q, self.normals)
        return float(out) if v.ndim == 1 else out

    def distance(self, a, b) -> float:
        return float(kernels.norm_rows(np.asarray(b, float) - np.asarray(a, float),
                                       self.kind, self.Q, self.normals))

    def pairwise(self, P) -> np.ndarray:
        return kernels.pairwise_norm(np.asarray(P, float), self.kind, self.Q, self.normals)

    def boundary_point(self, direction) -> np.ndarray:
        d = as_point(direction)
        n = self.norm(d)
        if n == 0.0:
            raise GeometryError("zero direction")
        return d / n

    def euclidean_ratio(self) -> tuple[float, float]:
        """(min, max) of |v| over Euclidean unit vectors v."""
        if self.kind == ELLIPSE:
            w = np.linalg.eigvalsh(self.Q)
            return math.sqrt(w[0]), math.sqrt(w[1])
        r = np.hypot(self.vertices[:, 0], self.vertices[:, 1])
        hmin = min(1.0 / np.hypot(*a) for a in self.normals)
        return 1.0 / r.max(), 1.0 / hmin

    def boundary_polygon(self, center=(0.0, 0.0), n_arc: int = 256) -> np.ndarray:
        c = as_point(center)
        if self.kind == POLYGON:
            return self.vertices + c
        t = np.linspace(0.0, 2 * math.pi, n_arc, endpoint=False)
        dirs = np.stack([np.cos(t), np.sin(t)], axis=1)
        return dirs / self.norm(dirs)[:, None] + c

    def edges(self) -> list[tuple[np.ndarray, np.ndarray]]:
        V = self.vertices
        return [(V[j], V[(j + 1) % len(V)]) for j in range(len(V))]

    def __repr__(self) -> str:
        return f"UnitBall({self.spec})"


def norm_distance(ball: UnitBall, a, b) -> float:
    return ball.distance(as_point(a), as_point(b))


# --------------------------------------------------------------------------
# boundary intersections
# --------------------------------------------------------------------------

class Intersection(NamedTuple):
    points: list
    segments: list  # (start, end) pairs where boundaries overlap


def _dedupe(points, tol):
    out = []
    for p in points:
        if all(np.hypot(*(p - q)) > tol for q in out):
            out.append(p)
    return out


def _segment_line(a, b, p, d, tol):
    """Intersect segment ab with the line p + t d."""
    e = b - a
    den = _cross(e, d)
    w = p - a
    if abs(den) <= tol * np.hypot(*e) * np.hypot(*d):
        if abs(_cross(w, d)) <= tol * max(np.hypot(*w), 1.0) * np.hypot(*d):
            return None, (a.copy(), b.copy())
        return None, None
    s = _cross(w, d) / den
    if -tol <= s <= 1.0 + tol:
        return a + min(max(s, 0.0), 1.0) * e, None
    return None, None


def boundary_line_intersection(ball: UnitBall, center, p, q, tol: float = EPS) -> Intersection:
    """Points where the line through p, q meets the boundary of ``ball + center``."""
    c, p, q = as_point(center), as_point(p), as_point(q)
    d = q - p
    if np.hypot(*d) == 0.0:
        raise GeometryError("degenerate line: p == q")
    if ball.kind == ELLIPSE:
        w = p - c
        Q = ball.Q
        a = d @ Q @ d
        b = 2.0 * (w @ Q @ d)
        cc = w @ Q @ w - 1.0
        disc = b * b - 4 * a * cc
        if disc < -tol * max(1.0, b * b):
            return Intersection([], [])
        if disc <= 0.0:
            return Intersection([p + (-b / (2 * a)) * d], [])
        r = math.sqrt(disc)
        ts = sorted({(-b - r) / (2 * a), (-b + r) / (2 * a)})
        return Intersection([p + t * d for t in ts], [])
    pts, segs = [], []
    for a, b in ball.edges():
        x, seg = _segment_line(a + c, b + c, p, d, tol)
        if seg is not None:
            segs.append(seg)
        elif x is not None:
            pts.append(x)
    if segs:
        on_seg = lambda x: any(_on_segment(x, s0, s1, tol) for s0, s1 in segs)
        pts = [x for x in pts if not on_seg(x)]
    pts = _dedupe(pts, tol)
    pts.sort(key=lambda x: float((x - p) @ d))
    return Intersection(pts, segs)


def _on_segment(x, a, b, tol):
    e = b - a
    L = np.hypot(*e)
    if L == 0:
        return np.hypot(*(x - a)) <= tol
    if abs(_cross(e, x - a)) > tol * L:
        return False
    s = (x - a) @ e / (L * L)
    return -tol <= s <= 1 + tol


def _segment_segment(a, b, c, d, tol):
    r = b - a
    s = d - c
    den = _cross(r, s)
    w = c - a
    Lr, Ls = np.hypot(*r), np.hypot(*s)
    if abs(den) <= tol * Lr * Ls:
        if abs(_cross(w, r)) > tol * Lr * max(1.0, np.hypot(*w)):
            return None, None
        # collinear: project c, d onto ab
        t0 = (c - a) @ r / (Lr * Lr)
        t1 = (d - a) @ r / (Lr * Lr)
        lo, hi = max(0.0, min(t0, t1)), min(1.0, max(t0, t1))
        if hi < lo - tol:
            return None, None
        if hi - lo <= tol:
            return a + lo * r, None
        return None, (a + lo * r, a + hi * r)
    t = _cross(w, s) / den
    u = _cross(w, r) / den
    if -tol <= t <= 1 + tol and -tol <= u <= 1 + tol:
        return a + min(max(t, 0.0), 1.0) * r, None
    return None, None


def _circle_circle(c1, c2):
    d = c2 - c1
    L = np.hypot(*d)
    if L > 2.0 or L == 0.0:
        return []
    m = c1 + 0.5 * d
    h = math.sqrt(max(1.0 - 0.25 * L * L, 0.0))
    n = np.array([-d[1], d[0]]) / L
    if h == 0.0:
        return [m]
    return [m + h * n, m - h * n]


def boundary_boundary_intersection(ball: UnitBall, c1, c2, tol: float = EPS) -> Intersection:
    """Intersection of the boundaries of ``ball + c1`` and ``ball + c2``."""
    c1, c2 = as_point(c1), as_point(c2)
    if np.hypot(*(c2 - c1)) == 0.0:
        raise GeometryError("identical centers")
    if ball.kind == ELLIPSE:
        L = np.linalg.cholesky(ball.Q)  # Q = L L^T, |v| = |L^T v|
        Lt = L.T
        pts = _circle_circle(Lt @ c1, Lt @ c2)
        Lt_inv = np.linalg.inv(Lt)
        return Intersection([Lt_inv @ p for p in pts], [])
    pts, segs = [], []
    E1 = [(a + c1, b + c1) for a, b in ball.edges()]
    E2 = [(a + c2, b + c2) for a, b in ball.edges()]
    for a, b in E1:
        for c, d in E2:
            x, seg = _segment_segment(a, b, c, d, tol)
            if seg is not None:
                segs.append(seg)
            elif x is not None:
                pts.append(x)
    if segs:
        pts = [x for x in pts if not any(_on_segment(x, s0, s1, tol) for s0, s1 in segs)]
    return Intersection(_dedupe(pts, tol), segs)


# --------------------------------------------------------------------------
# hexagon frame and cones
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HexFrame:
    """Six boundary points y0..y5 with unit consecutive distances.

    ``points[i]`` is y_i; cone ``i`` spans the directions of y_i to y_{i+1}.
    """

    points: np.ndarray
    directions: np.ndarray  # angle of each y_i in [0, 2*pi)

    def cone_dirs(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self.points[i % 6], self.points[(i + 1) % 6]


def _angle(v) -> float:
    return math.atan2(v[1], v[0]) % (2 * math.pi)


def construct_hex_frame(ball: UnitBall, seed=None, tol: float = EPS) -> HexFrame:
    """Ruler-and-compass hexagon inscribed in the boundary of ``ball``.

    ``seed`` is y5 (default: the boundary point in direction (1, 0)); y0 is the
    first point of bd(B) meeting bd(B) + y5 anticlockwise from y5.
    """
    if seed is None:
        y5 = ball.boundary_point((1.0, 0.0))
    else:
        y5 = as_point(seed)
        if abs(ball.norm(y5) - 1.0) > max(tol, 1e-9):
            raise GeometryError("seed is not on the unit ball boundary")
    hit = boundary_boundary_intersection(ball, (0.0, 0.0), y5, tol)
    cands = list(hit.points) + [p for seg in hit.segments for p in seg]
    a5 = _angle(y5)
    best, best_off = None, None
    for p in cands:
        off = (_angle(p) - a5) % (2 * math.pi)
        if off <= 1e-12 or off >= 2 * math.pi - 1e-12:
            continue
        if best_off is None or off < best_off:
            best, best_off = p, off
    if best is None:
        raise GeometryError("hexagon construction found no intersection")
    y0 = best
    y1 = y0 - y5
    pts = np.array([y0, y1, -y5, -y0, -y1, y5])
    return HexFrame(pts, np.array([_angle(p) for p in pts]))


@dataclass(frozen=True)
class Cone:
    """K(apex, theta_i, theta_{i+1}) for a frame, closed on both rays."""

    apex: np.ndarray
    i: int
    frame: HexFrame

    def contains(self, p, tol: float = 1e-12) -> bool:
        return cone_contains(self, p, tol)


def cone_contains(cone: Cone, p, tol: float = 1e-12) -> bool:
    v = as_point(p) - cone.apex
    vn = np.hypot(*v)
    if vn == 0.0:
        return True
    a, b = cone.frame.cone_dirs(cone.i)
    return (_cross(a, v) >= -tol * vn * np.hypot(*a)
            and _cross(v, b) >= -tol * vn * np.hypot(*b))


def nearest_in_cone(ball: UnitBall, frame: HexFrame, X, y, i: int):
    """Closest terminal of X inside K(y, theta_i, theta_{i+1}).

    Returns ``(index, distance)`` or ``None`` when the cone holds no terminal.
    """
    X = np.asarray(X, dtype=float).reshape(-1, 2)
    idx, dist = kernels.cone_nearest(X, as_point(y)[None, :], frame.points,
                                     *ball.kernel_args)
    j = int(idx[0, i % 6])
    if j < 0:
        return None
    return j, float(dist[0, i % 6])


def nearest_all_cones(ball: UnitBall, frame: HexFrame, X, Y):
    """Batch form of :func:`nearest_in_cone` for every cone at every Y."""
    return kernels.cone_nearest(np.asarray(X, float), np.asarray(Y, float),
                                frame.points, *ball.kernel_args)
