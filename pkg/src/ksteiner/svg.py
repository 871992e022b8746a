"""Small hand-written SVG figures: OODC faces and solution trees."""
from __future__ import annotations

from xml.sax.saxutils import quoteattr, escape

import numpy as np

_PALETTE = ["#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462",
            "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f"]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class _Canvas:
    """Maps world coordinates into a ``size``-pixel square with y pointing up."""

    def __init__(self, lo, hi, size: int = 800, pad: float = 0.03):
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
        self.lo = lo - pad * span
        self.scale = size / (span * (1 + 2 * pad))
        self.size = size
        self.parts: list[str] = []

    def xy(self, p):
        x = (p[0] - self.lo[0]) * self.scale
        y = self.size - (p[1] - self.lo[1]) * self.scale
        return _fmt(x), _fmt(y)

    def path(self, rings) -> str:
        out = []
        for ring in rings:
            pts = [self.xy(p) for p in ring]
            out.append("M" + " L".join(f"{x},{y}" for x, y in pts) + " Z")
        return " ".join(out)

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" '
                f'height="{self.size}" viewBox="0 0 {self.size} {self.size}">')
        return "\n".join([head, *self.parts, "</svg>\n"])


def label_text(label) -> str:
    return ",".join("-" if t is None else str(t) for t in label)


def _face_rings(face):
    rings = [np.asarray(face.exterior.coords)]
    rings += [np.asarray(r.coords) for r in face.interiors]
    return rings


def partition_svg(regions, terminals, size: int = 800) -> str:
    """Every face is a ``<path>`` carrying ``data-label`` and a ``<title>`` tooltip."""
    box = regions.box
    canvas = _Canvas((box.xmin, box.ymin), (box.xmax, box.ymax), size)
    colours = {}
    for idx, r in enumerate(regions):
        key = r.terminals
        colours.setdefault(key, _PALETTE[len(colours) % len(_PALETTE)])
        lab = label_text(r.label)
        canvas.parts.append(
            f'<path id="face-{idx}" data-label={quoteattr(lab)} d="{canvas.path(_face_rings(r.face))}" '
            f'fill="{colours[key]}" fill-rule="evenodd" stroke="#444" stroke-width="0.5">'
            f"<title>{escape(lab)}</title></path>")
    _terminals(canvas, terminals)
    return canvas.render()


def _terminals(canvas, terminals):
    for i, p in enumerate(np.asarray(terminals, float).reshape(-1, 2)):
        x, y = canvas.xy(p)
        canvas.parts.append(f'<circle cx="{x}" cy="{y}" r="4" fill="black" data-terminal="{i}">'
                            f"<title>t{i}</title></circle>")


def solution_svg(solution, size: int = 800) -> str:
    """Tree edges as lines, terminals as dots, steiner points as red squares."""
    P = np.vstack([solution.terminals, solution.steiner.reshape(-1, 2)])
    lo, hi = P.min(axis=0), P.max(axis=0)
    canvas = _Canvas(lo, hi, size, pad=0.08)
    for a, b in solution.edges:
        (x1, y1), (x2, y2) = canvas.xy(solution.node_point(a)), canvas.xy(solution.node_point(b))
        canvas.parts.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" '
                            f'stroke="#1f4e9a" stroke-width="2"/>')
    _terminals(canvas, solution.terminals)
    for j, s in enumerate(solution.steiner.reshape(-1, 2)):
        x, y = canvas.xy(s)
        canvas.parts.append(f'<rect x="{float(x) - 4:.6g}" y="{float(y) - 4:.6g}" width="8" '
                            f'height="8" fill="#c0392b" data-steiner="{j}"><title>s{j}</title></rect>')
    return canvas.render()
