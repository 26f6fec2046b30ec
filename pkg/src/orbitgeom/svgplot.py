"""Minimal static SVG rendering for point clouds, polygons, and curves.

Plots are presentation-only: a fixed 800x800 viewBox with the data transform
recorded in a metadata element. Output is deterministic (fixed float
formatting, no timestamps).
"""

from __future__ import annotations

import json

import numpy as np

_SIZE = 800
_MARGIN = 40
_MAX_POINTS = 4000


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def render_svg(points=None, polygon=None, curve=None) -> str:
    """Render up to three layers: sampled points, a closed polygon, a polyline."""
    layers = []
    geoms = []
    for g in (points, polygon, curve):
        if g is not None:
            g = np.asarray(g, dtype=float).reshape(-1, 2)
            geoms.append(g)
        else:
            geoms.append(None)
    stacked = [g for g in geoms if g is not None and g.size]
    if stacked:
        allpts = np.vstack(stacked)
        lo = allpts.min(axis=0)
        hi = allpts.max(axis=0)
    else:
        lo = np.array([-1.0, -1.0])
        hi = np.array([1.0, 1.0])
    span = np.maximum(hi - lo, 1e-12)
    scale = (_SIZE - 2 * _MARGIN) / float(np.max(span))
    center = 0.5 * (lo + hi)

    def to_px(xy):
        x = _SIZE / 2 + (xy[0] - center[0]) * scale
        y = _SIZE / 2 - (xy[1] - center[1]) * scale
        return x, y

    meta = {
        "viewBox": [0, 0, _SIZE, _SIZE],
        "center": [float(center[0]), float(center[1])],
        "scale": float(scale),
    }
    layers.append(f"<metadata>{json.dumps(meta, sort_keys=True)}</metadata>")
    pts, poly, crv = geoms
    if poly is not None and poly.size:
        coords = " ".join(",".join(map(_fmt, to_px(v))) for v in poly)
        layers.append(
            f'<polygon points="{coords}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>'
        )
    if crv is not None and crv.size:
        coords = " ".join(",".join(map(_fmt, to_px(v))) for v in crv)
        layers.append(
            f'<polyline points="{coords}" fill="none" stroke="#2ca02c" stroke-width="1.5"/>'
        )
    if pts is not None and pts.size:
        step = max(1, len(pts) // _MAX_POINTS)
        for v in pts[::step]:
            x, y = to_px(v)
            layers.append(
                f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="1.2" fill="#d62728" fill-opacity="0.5"/>'
            )
    body = "\n".join(layers)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_SIZE} {_SIZE}">\n'
        f"{body}\n</svg>\n"
    )
