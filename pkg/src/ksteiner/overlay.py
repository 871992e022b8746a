"""Overlay of the six ODC partitions (the OODC partition) and point location.

All cell boundaries are noded together with snap rounding, faces come out of
``shapely.polygonize``, and every face is labelled by asking the six
cone-nearest queries at an interior point.  A label is the 6-tuple of
terminal indices (``None`` where the cone holds no terminal).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import shapely
from shapely import STRtree
from shapely.geometry import LineString, Point

from .norms import GeometryError, HexFrame, UnitBall, nearest_all_cones
from .odc import Box, ODCPartition, grid_size

Label = tuple


@dataclass(frozen=True, eq=False)
class OODCRegion:
    face: shapely.Polygon
    label: Label
    representative: tuple[float, float]

    @property
    def terminals(self) -> frozenset:
        return frozenset(t for t in self.label if t is not None)


class RegionList(list):
    """List of regions that remembers its spatial index."""

    box: Box | None = None
    _tree: STRtree | None = None

    def tree(self) -> STRtree:
        if self._tree is None or len(self._tree.geometries) != len(self):
            self._tree = STRtree([r.face for r in self])
        return self._tree


@dataclass
class Arrangement:
    vertices: np.ndarray
    edges: list  # ((u, v), partition index or -1 for the box)
    faces: list

    @property
    def euler_components(self) -> int:
        parent = list(range(len(self.vertices)))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a
        for (u, v), _ in self.edges:
            parent[find(u)] = find(v)
        return len({find(a) for a in range(len(self.vertices))})

    def euler_ok(self) -> bool:
        """V - E + F = 1 + C, with F counting bounded faces plus the outer one."""
        V, E, F = len(self.vertices), len(self.edges), len(self.faces) + 1
        return V - E + F == 1 + self.euler_components


def _noded_lines(partitions, box: Box):
    grid = grid_size(box)
    lines = [LineString(box.corners[[0, 1, 2, 3, 0]])]
    for P in partitions:
        lines.extend(LineString(c) for c in P.boundary_lines() if len(c) >= 2)
    return shapely.unary_union(lines, grid_size=grid), grid


def _representative(face) -> tuple[float, float]:
    c = face.centroid
    if not face.contains(c):
        c = face.point_on_surface()
    return (float(c.x), float(c.y))


def _check(partitions):
    if len(partitions) != 6:
        raise GeometryError("expected six partitions")
    P0 = partitions[0]
    for i, P in enumerate(partitions):
        if (P.i != i or P.box != P0.box or P.sector.ball is not P0.sector.ball
                or P.sector.frame is not P0.sector.frame
                or not np.array_equal(P.terminals, P0.terminals)):
            raise GeometryError("partitions do not share ball, frame, terminals and box")


def label_points(ball: UnitBall, frame: HexFrame, X, Y) -> list[Label]:
    idx, _ = nearest_all_cones(ball, frame, X, np.asarray(Y, float).reshape(-1, 2))
    return [tuple(None if j < 0 else int(j) for j in row) for row in idx]


def overlay_partitions(partitions: list[ODCPartition], box: Box | None = None) -> RegionList:
    """Faces of the OODC partition with their candidate-neighbour labels."""
    _check(partitions)
    P0 = partitions[0]
    box = P0.box if box is None else box
    if box != P0.box:
        raise GeometryError("box differs from the partitions' box")
    noded, _ = _noded_lines(partitions, box)
    faces = [f for f in shapely.get_parts(shapely.polygonize(shapely.get_parts(noded)))
             if f.area > 0.0]
    faces.sort(key=lambda f: (f.bounds[1], f.bounds[0], -f.area))
    reps = [_representative(f) for f in faces]
    labels = label_points(P0.sector.ball, P0.sector.frame, P0.terminals, reps) if faces else []
    out = RegionList(OODCRegion(f, lab, r) for f, lab, r in zip(faces, labels, reps))
    out.box = box
    return out


def build_arrangement(partitions: list[ODCPartition]) -> Arrangement:
    """Planar graph of the overlay: welded vertices, 2-point edges, faces."""
    _check(partitions)
    box = partitions[0].box
    noded, _ = _noded_lines(partitions, box)
    segs = {}
    verts = {}

    def vid(p):
        key = (float(p[0]), float(p[1]))
        if key not in verts:
            verts[key] = len(verts)
        return verts[key]
    for part in shapely.get_parts(noded):
        c = np.asarray(part.coords)
        for a, b in zip(c[:-1], c[1:]):
            u, v = vid(a), vid(b)
            if u != v:
                segs.setdefault((min(u, v), max(u, v)), -1)
    faces = [f for f in shapely.get_parts(shapely.polygonize(shapely.get_parts(noded)))
             if f.area > 0.0]
    V = np.array(list(verts.keys())) if verts else np.zeros((0, 2))
    return Arrangement(V, [(e, p) for e, p in segs.items()], faces)


def locate(regions: RegionList, p) -> OODCRegion:
    """Region whose closed face contains ``p``; ties go to the lowest index."""
    x, y = float(p[0]), float(p[1])
    box = regions.box
    if box is not None and not box.contains((x, y), tol=1e-9 * box.diagonal):
        raise GeometryError(f"point ({x}, {y}) lies outside the working box")
    pt = Point(x, y)
    hits = regions.tree().query(pt, predicate="intersects")
    if len(hits):
        return regions[int(np.min(hits))]
    # numerically on a snapped boundary: fall back to the nearest face
    j = regions.tree().nearest(pt)
    if j is None:
        raise GeometryError("no regions to locate in")
    return regions[int(j)]


def candidate_region_labels(regions) -> list[tuple[Label, tuple[float, float]]]:
    """One ``(label, representative)`` per distinct label, in first-seen order."""
    seen = {}
    for r in regions:
        if r.label not in seen:
            seen[r.label] = r.representative
    return list(seen.items())
