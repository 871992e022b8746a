"""Oriented Dirichlet cell (ODC) partitions.

The i-th ODC partition is the Voronoi diagram of the terminals under the
convex distance of the sector ``B ∩ K(o, 180°+θ_i, 180°+θ_{i+1})``.  A
terminal x "sees" the points of the wedge ``x + K(o, 180°+θ_i, 180°+θ_{i+1})``
and inside that wedge its distance is the plain norm, so every cell is the
owner's wedge minus the convex pieces where some other terminal is closer.
Pieces are cut out with exact half-plane clipping; shapely does the final
union and difference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import shapely
from shapely.geometry import Polygon, box as shapely_box

from .kernels import ELLIPSE
from .norms import GeometryError, HexFrame, UnitBall, _cross, as_point


class Box(NamedTuple):
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @property
    def corners(self) -> np.ndarray:
        return np.array([[self.xmin, self.ymin], [self.xmax, self.ymin],
                         [self.xmax, self.ymax], [self.xmin, self.ymax]])

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.xmax - self.xmin, self.ymax - self.ymin)

    def polygon(self) -> Polygon:
        return shapely_box(self.xmin, self.ymin, self.xmax, self.ymax)

    def contains(self, p, tol: float = 0.0) -> bool:
        x, y = p
        return (self.xmin - tol <= x <= self.xmax + tol
                and self.ymin - tol <= y <= self.ymax + tol)

    def scaled(self, factor: float) -> "Box":
        cx = 0.5 * (self.xmin + self.xmax)
        cy = 0.5 * (self.ymin + self.ymax)
        hx = 0.5 * (self.xmax - self.xmin) * factor
        hy = 0.5 * (self.ymax - self.ymin) * factor
        return Box(cx - hx, cy - hy, cx + hx, cy + hy)


def working_box(X, inflation: float = 3.0) -> Box:
    """Bounding box of X grown by ``inflation * diameter + 1`` on every side."""
    X = np.asarray(X, dtype=float).reshape(-1, 2)
    if len(X) == 0:
        raise GeometryError("empty terminal set")
    diff = X[:, None, :] - X[None, :, :]
    diam = float(np.sqrt((diff ** 2).sum(-1)).max())
    m = inflation * diam + 1.0
    lo = X.min(axis=0) - m
    hi = X.max(axis=0) + m
    return Box(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))


# --------------------------------------------------------------------------
# convex clipping
# --------------------------------------------------------------------------

def clip_halfplane(poly: np.ndarray, g, c: float) -> np.ndarray:
    """Keep the part of convex ``poly`` where ``g . v <= c``."""
    if len(poly) == 0:
        return poly
    s = poly @ np.asarray(g, float) - c
    scale = max(1.0, float(np.abs(poly).max())) * max(float(np.hypot(*g)), 1e-300)
    tol = 1e-13 * scale
    if np.all(s <= tol):
        return poly
    if np.all(s >= -tol):
        return poly[:0]
    out = []
    m = len(poly)
    for j in range(m):
        a, b = poly[j], poly[(j + 1) % m]
        sa, sb = s[j], s[(j + 1) % m]
        if sa <= 0.0:
            out.append(a)
        if (sa < 0.0 < sb) or (sb < 0.0 < sa):
            t = sa / (sa - sb)
            out.append(a + t * (b - a))
    if len(out) < 3:
        return poly[:0]
    return np.array(out)


def clip_wedge(poly: np.ndarray, apex, u1, u2) -> np.ndarray:
    """Intersect convex ``poly`` with the wedge apex + cone(u1 -> u2, ccw)."""
    apex = np.asarray(apex, float)
    g1 = np.array([u1[1], -u1[0]])
    poly = clip_halfplane(poly, g1, float(g1 @ apex))
    g2 = np.array([-u2[1], u2[0]])
    return clip_halfplane(poly, g2, float(g2 @ apex))


def _area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


# --------------------------------------------------------------------------
# sector shape and convex distance
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SectorShape:
    """``B ∩ K(o, 180°+θ_i, 180°+θ_{i+1})``: the wavefront shape of partition i."""

    ball: UnitBall
    frame: HexFrame
    i: int

    @property
    def u_lo(self) -> np.ndarray:
        return -self.frame.points[self.i % 6]

    @property
    def u_hi(self) -> np.ndarray:
        return -self.frame.points[(self.i + 1) % 6]

    def in_cone(self, v, tol: float = 1e-12) -> bool:
        v = np.asarray(v, float)
        vn = math.hypot(*v)
        if vn == 0.0:
            return True
        a, b = self.u_lo, self.u_hi
        return (_cross(a, v) >= -tol * vn * math.hypot(*a)
                and _cross(v, b) >= -tol * vn * math.hypot(*b))

    def arc_points(self) -> np.ndarray:
        """Boundary points of B from u_lo to u_hi (polygon vertices included)."""
        a, b = self.u_lo, self.u_hi
        if self.ball.is_polygon:
            pts = [a]
            for v in self.ball.vertices:
                if (_cross(a, v) > 1e-12 and _cross(v, b) > 1e-12):
                    pts.append(v)
            pts.append(b)
            pts.sort(key=lambda p: math.atan2(_cross(a, p), float(a @ p)))
            out = [pts[0]]
            for p in pts[1:]:
                if math.hypot(*(p - out[-1])) > 1e-12:
                    out.append(p)
            return np.array(out)
        t0 = math.atan2(a[1], a[0])
        span = math.atan2(_cross(a, b), float(a @ b))
        t = t0 + np.linspace(0.0, span, 64)
        dirs = np.stack([np.cos(t), np.sin(t)], axis=1)
        return dirs / self.ball.norm(dirs)[:, None]

    def polygon(self) -> np.ndarray:
        return np.vstack([[0.0, 0.0], self.arc_points()])

    def pieces(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray | None]]:
        """Sub-wedges (u, v, facet normal) on which the norm is linear.

        Ellipse balls return one wedge with ``None`` as normal.
        """
        if self.ball.kind == ELLIPSE:
            return [(self.u_lo, self.u_hi, None)]
        arc = self.arc_points()
        out = []
        for p, q in zip(arc[:-1], arc[1:]):
            a = np.linalg.solve(np.array([p, q]), np.ones(2))
            out.append((p, q, a))
        return out


def sector_shape(ball: UnitBall, frame: HexFrame, i: int) -> SectorShape:
    return SectorShape(ball, frame, i % 6)


def convex_distance(sector: SectorShape, frm, to) -> float:
    """δ_C(from, to) for the sector C: the norm inside the cone, else inf."""
    v = as_point(to) - as_point(frm)
    if v[0] == 0.0 and v[1] == 0.0:
        return 0.0
    if not sector.in_cone(v):
        return math.inf
    return sector.ball.norm(v)


# --------------------------------------------------------------------------
# dominance pieces and bisectors
# --------------------------------------------------------------------------

def _wedge_polys(sector: SectorShape, x, base: np.ndarray):
    """Clip ``base`` to each linear sub-wedge of x's visibility wedge."""
    return [(clip_wedge(base, x, u, v), a) for u, v, a in sector.pieces()]


def beat_pieces(sector: SectorShape, x, w, x_wins_ties: bool, base: np.ndarray,
                wx=None, ww=None) -> list[np.ndarray]:
    """Convex pieces of ``base`` where terminal x is strictly δ_C-closer than w.

    Only points seen by both terminals are considered; ``wx``/``ww`` are the
    precomputed sub-wedge polygons of x and w.
    """
    ball = sector.ball
    x = np.asarray(x, float)
    w = np.asarray(w, float)
    if wx is None:
        wx = _wedge_polys(sector, x, base)
    if ww is None:
        ww = _wedge_polys(sector, w, base)
    out = []
    if ball.kind == ELLIPSE:
        Q = ball.Q
        g = 2.0 * Q @ (w - x)
        c = float(w @ Q @ w - x @ Q @ x)
        shared = _intersect_convex(wx[0][0], ww[0][0], sector, w)
        if len(shared) == 0:
            return out
        if math.hypot(*g) <= 1e-14 * max(1.0, abs(c)):
            return [shared] if x_wins_ties else out
        piece = clip_halfplane(shared, g, c)
        if len(piece):
            out.append(piece)
        return out
    pieces = sector.pieces()
    for (pj, aj) in wx:
        if len(pj) == 0:
            continue
        for (m, (u, v, am)) in enumerate(pieces):
            if len(ww[m][0]) == 0:
                continue
            shared = clip_wedge(pj, w, u, v)
            if len(shared) == 0:
                continue
            g = aj - am
            c = float(aj @ x - am @ w)
            if math.hypot(*g) <= 1e-12 * math.hypot(*aj):
                # same facet: a constant comparison a.x vs a.w
                diff = float(aj @ x - aj @ w)
                tie = abs(diff) <= 1e-12 * max(1.0, abs(aj @ x), abs(aj @ w))
                if (tie and x_wins_ties) or (not tie and diff > 0.0):
                    out.append(shared)
                continue
            piece = clip_halfplane(shared, g, c)
            if len(piece):
                out.append(piece)
    return out


def _intersect_convex(pa: np.ndarray, pb: np.ndarray, sector: SectorShape, w) -> np.ndarray:
    # pb is w's wedge clipped to the same base, so clipping pa by w's wedge suffices
    if len(pa) == 0 or len(pb) == 0:
        return pa[:0]
    return clip_wedge(pa, w, sector.u_lo, sector.u_hi)


def grid_size(box: Box) -> float:
    """Snap-rounding grid for boolean ops: a power of two near 1e-10 * diagonal."""
    return 2.0 ** math.floor(math.log2(1e-10 * box.diagonal))


def _weld(poly: np.ndarray, tol: float) -> np.ndarray:
    """Drop consecutive vertices closer than ``tol``; GEOS snapping chokes on them."""
    if len(poly) < 2:
        return poly
    keep = [0]
    for j in range(1, len(poly)):
        if np.abs(poly[j] - poly[keep[-1]]).max() > tol:
            keep.append(j)
    if len(keep) > 1 and np.abs(poly[keep[-1]] - poly[keep[0]]).max() <= tol:
        keep.pop()
    return poly[keep]


def _to_geom(polys, grid: float) -> shapely.Geometry:
    polys = [_weld(np.asarray(p, float), grid) for p in polys]
    geoms = [Polygon(p) for p in polys if len(p) >= 3 and abs(_area(p)) > 0.0]
    if not geoms:
        return Polygon()
    return shapely.union_all(geoms, grid_size=grid)


def _polygonal(g):
    """Drop the line/point debris a snapped boolean op may leave behind."""
    if g.geom_type in ("Polygon", "MultiPolygon"):
        return g
    polys = [p for p in shapely.get_parts(g) if p.geom_type == "Polygon" and not p.is_empty]
    if not polys:
        return Polygon()
    return polys[0] if len(polys) == 1 else shapely.MultiPolygon(polys)


def _minus(a, b, grid: float):
    if b.is_empty:
        return _polygonal(a)  # already snapped by _to_geom
    return _polygonal(shapely.difference(a, b, grid_size=grid))


@dataclass
class Bisector:
    """Boundary between two terminals' dominance regions inside a box."""

    polylines: list[np.ndarray]
    left_owner: int = 0
    right_owner: int = 1

    def sample(self, per_segment: int = 5) -> np.ndarray:
        out = []
        for pl in self.polylines:
            for a, b in zip(pl[:-1], pl[1:]):
                t = np.linspace(0.0, 1.0, per_segment + 2)[1:-1, None]
                out.append(a + t * (b - a))
        return np.vstack(out) if out else np.zeros((0, 2))


def _boundary_lines(geom, box: Box) -> list[np.ndarray]:
    if geom.is_empty:
        return []
    edge = box.polygon().exterior.buffer(1e-9 * box.diagonal)
    inner = geom.boundary.difference(edge)
    lines = []
    for part in getattr(inner, "geoms", [inner]):
        if part.is_empty or part.geom_type not in ("LineString", "LinearRing"):
            continue
        lines.append(np.asarray(part.coords))
    return lines


def bisector(sector: SectorShape, p, q, box: Box) -> Bisector:
    """Curve separating ``{v : δ_C(p, v) <= δ_C(q, v)}`` from its complement."""
    p, q = as_point(p), as_point(q)
    if p[0] == q[0] and p[1] == q[1]:
        raise GeometryError("bisector of identical points")
    base = box.corners
    wq = _wedge_polys(sector, q, base)
    q_wedge = clip_wedge(base, q, sector.u_lo, sector.u_hi)
    lost = beat_pieces(sector, p, q, True, base, ww=wq)
    grid = grid_size(box)
    q_cell = _minus(_to_geom([q_wedge], grid), _to_geom(lost, grid), grid)
    return Bisector(_boundary_lines(q_cell, box))


# --------------------------------------------------------------------------
# partition
# --------------------------------------------------------------------------

@dataclass
class ODCPartition:
    """Cells of the i-th ODC partition inside ``box``.

    ``cells`` holds ``(owner, geometry)``; owner ``None`` is the region whose
    cone sees no terminal.
    """

    i: int
    cells: list
    box: Box
    sector: SectorShape
    terminals: np.ndarray

    def owner_at(self, y) -> int | None:
        pt = shapely.Point(*y)
        best = None
        for owner, geom in self.cells:
            if geom.covers(pt):
                if owner is None:
                    if best is None:
                        best = -1
                    continue
                if best is None or best == -1 or owner < best:
                    best = owner
        return None if best in (None, -1) else best

    def boundary_lines(self) -> list[np.ndarray]:
        out = []
        for _, geom in self.cells:
            for poly in getattr(geom, "geoms", [geom]):
                if poly.is_empty:
                    continue
                out.append(np.asarray(poly.exterior.coords))
                out.extend(np.asarray(r.coords) for r in poly.interiors)
        return out

    def to_json(self) -> dict:
        cells = []
        for owner, geom in self.cells:
            rings = []
            for poly in getattr(geom, "geoms", [geom]):
                if poly.is_empty:
                    continue
                rings.append(np.asarray(poly.exterior.coords).tolist())
                rings.extend(np.asarray(r.coords).tolist() for r in poly.interiors)
            cells.append({"owner": owner, "rings": rings})
        return {"i": self.i, "box": list(self.box), "cells": cells}


def build_odc_partition(ball: UnitBall, frame: HexFrame, X, i: int, box: Box) -> ODCPartition:
    """Cells of the i-th ODC partition of X, clipped to ``box``.

    Ties (possible as 2-d regions for polygonal norms) go to the lower index.
    """
    X = np.asarray(X, dtype=float).reshape(-1, 2)
    if len(X) == 0:
        raise GeometryError("empty terminal set")
    sector = sector_shape(ball, frame, i)
    base = box.corners
    wedges = [clip_wedge(base, x, sector.u_lo, sector.u_hi) for x in X]
    sub = [_wedge_polys(sector, x, base) for x in X]
    # cheap rejection: axis-aligned extents of each wedge
    ext = np.array([[w[:, 0].min(), w[:, 1].min(), w[:, 0].max(), w[:, 1].max()]
                    if len(w) else [np.inf, np.inf, -np.inf, -np.inf] for w in wedges])
    grid = grid_size(box)
    cells = []
    for w_idx, w in enumerate(X):
        if len(wedges[w_idx]) == 0:
            continue
        e = ext[w_idx]
        overlap = ((ext[:, 0] <= e[2]) & (ext[:, 2] >= e[0])
                   & (ext[:, 1] <= e[3]) & (ext[:, 3] >= e[1]))
        lost = []
        for x_idx in np.flatnonzero(overlap):
            if x_idx == w_idx:
                continue
            lost.extend(beat_pieces(sector, X[x_idx], w, x_idx < w_idx, base,
                                    wx=sub[x_idx], ww=sub[w_idx]))
        cell = _minus(_to_geom([wedges[w_idx]], grid), _to_geom(lost, grid), grid)
        if not cell.is_empty and cell.area > 0.0:
            cells.append((w_idx, cell))
    empty = _minus(box.polygon(), _to_geom(wedges, grid), grid)
    if not empty.is_empty and empty.area > 0.0:
        cells.append((None, empty))
    return ODCPartition(i % 6, cells, box, sector, X)
