"""SVG rendering of targets, reference path and closed-loop trajectory."""

from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .routing import Field

_MARGIN = 1.0  # m


def _star(cx: float, cy: float, r: float) -> str:
    pts = []
    for k in range(10):
        rad = r if k % 2 == 0 else 0.45 * r
        a = math.pi / 2 + k * math.pi / 5
        pts.append(f"{cx + rad * math.cos(a):.4f},{cy - rad * math.sin(a):.4f}")
    return f'<polygon class="target" points="{" ".join(pts)}"/>'


def _polyline(xy: np.ndarray, cls: str, flip: float) -> str:
    pts = " ".join(f"{x:.4f},{flip - y:.4f}" for x, y in xy)
    return f'<polyline class="{cls}" fill="none" points="{pts}"/>'


def render_svg(
    fld: Field,
    reference: Sequence[np.ndarray] = (),
    headings: Optional[np.ndarray] = None,
    trajectory: Optional[np.ndarray] = None,
    title: str = "",
    px_per_m: float = 30.0,
) -> str:
    """SVG document with one star per target.

    ``reference`` is a list of ``(n, 2+)`` sample arrays drawn as polylines;
    ``headings`` is an ``(m, 3)`` array of poses drawn as short ticks;
    ``trajectory`` is an ``(n, 2+)`` array overlaid in a second colour.
    Drawing coordinates are meters with the y axis flipped.
    """
    arrays = [fld.targets] + [np.asarray(r)[:, :2] for r in reference]
    if trajectory is not None and len(trajectory):
        arrays.append(np.asarray(trajectory)[:, :2])
    allpts = np.vstack(arrays)
    lo = allpts.min(axis=0) - _MARGIN
    hi = allpts.max(axis=0) + _MARGIN
    if fld.bounds is not None:
        lo = np.minimum(lo, np.asarray(fld.bounds[:2]) - _MARGIN)
        hi = np.maximum(hi, np.asarray(fld.bounds[2:]) + _MARGIN)
    w, h = hi - lo
    flip = lo[1] + hi[1]
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * px_per_m:.0f}" height="{h * px_per_m:.0f}" '
        f'viewBox="{lo[0]:.4f} {lo[1]:.4f} {w:.4f} {h:.4f}">',
        "<style>.reference{stroke:#d62728;stroke-width:0.04}.trajectory{stroke:#1f77b4;stroke-width:0.05}"
        ".tick{stroke:#333;stroke-width:0.04}.target{fill:#2ca02c}</style>",
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append('<g id="reference">')
    out += [_polyline(np.asarray(r)[:, :2], "reference", flip) for r in reference if len(r) > 1]
    out.append("</g>")
    if headings is not None:
        out.append('<g id="headings">')
        for x, y, th in np.asarray(headings)[:, :3]:
            x2, y2 = x + 0.4 * math.cos(th), y + 0.4 * math.sin(th)
            out.append(f'<line class="tick" x1="{x:.4f}" y1="{flip - y:.4f}" x2="{x2:.4f}" y2="{flip - y2:.4f}"/>')
        out.append("</g>")
    if trajectory is not None and len(trajectory) > 1:
        out.append('<g id="trajectory">')
        out.append(_polyline(np.asarray(trajectory)[:, :2], "trajectory", flip))
        out.append("</g>")
    out.append('<g id="targets">')
    out += [_star(x, flip - y, 0.25) for x, y in fld.targets]
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
