"""Hand-written SVG figures: GP posterior bands and a track map with shaded collision regions.

Output depends only on the inputs (fixed number formatting, no timestamps),
so identical inputs give byte-identical files.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from overtake.lines import RacingLine
from overtake.track import TrackModel

PANEL_W, PANEL_H, PAD = 640, 220, 40


def _num(v: float) -> str:
    return f"{v:.2f}"


def _points(xs, ys) -> str:
    return " ".join(f"{_num(x)},{_num(y)}" for x, y in zip(xs, ys))


def _header(width: float, height: float, comment: str) -> list[str]:
    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    if comment:
        out.append(f"<!-- {escape(comment).replace('--', '- -')} -->")
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(width)}" height="{_num(height)}" '
               f'viewBox="0 0 {_num(width)} {_num(height)}">')
    out.append(f'<rect width="{_num(width)}" height="{_num(height)}" fill="white"/>')
    return out


class _Axes:
    """Linear map from data coordinates into one panel (y grows upwards)."""

    def __init__(self, x0, x1, y0, y1, left, top, width, height):
        if y1 - y0 < 1e-9:
            y0, y1 = y0 - 0.5, y1 + 0.5
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1
        self.left, self.top, self.width, self.height = left, top, width, height

    def px(self, x):
        return self.left + (np.asarray(x, float) - self.x0) / (self.x1 - self.x0) * self.width

    def py(self, y):
        return self.top + self.height - (np.asarray(y, float) - self.y0) / (self.y1 - self.y0) * self.height


def _panel(ax: _Axes, s, mu, sd, obs_s, obs_y, label: str, color: str) -> list[str]:
    lo, hi = mu - sd, mu + sd
    band = _points(np.concatenate([ax.px(s), ax.px(s[::-1])]), np.concatenate([ax.py(hi), ax.py(lo[::-1])]))
    out = [
        f'<g class="panel" data-series="{label}">',
        f'<rect x="{_num(ax.left)}" y="{_num(ax.top)}" width="{_num(ax.width)}" height="{_num(ax.height)}" '
        f'fill="none" stroke="#888"/>',
        f'<polygon class="band" data-series="{label}" points="{band}" fill="{color}" fill-opacity="0.25" stroke="none"/>',
        f'<polyline class="mean" points="{_points(ax.px(s), ax.py(mu))}" fill="none" stroke="{color}" stroke-width="1.5"/>',
    ]
    for x, y in zip(ax.px(obs_s), ax.py(obs_y)):
        out.append(f'<circle class="obs" cx="{_num(x)}" cy="{_num(y)}" r="1.2" fill="#333"/>')
    out.append(f'<text x="{_num(ax.left + 4)}" y="{_num(ax.top + 14)}" font-size="12" font-family="sans-serif">'
               f'{escape(label)}: mean +- 1 sd, y in [{ax.y0:.2f}, {ax.y1:.2f}]</text>')
    out.append("</g>")
    return out


def gp_svg(gp, observations=(), n_grid: int = 400, comment: str = "") -> str:
    """Two stacked panels, lateral offset and speed, each with one posterior band.

    ``observations`` holds items with ``s``, ``d`` and ``v_s`` attributes.
    """
    L = gp.lap_length
    s = np.linspace(0.0, L, n_grid)
    obs_s = np.array([o.s for o in observations], float)
    obs_d = np.array([o.d for o in observations], float)
    obs_v = np.array([o.v_s for o in observations], float)
    width, height = PANEL_W + 2 * PAD, 2 * PANEL_H + 3 * PAD
    out = _header(width, height, comment)
    for k, (model, ys, label, color) in enumerate(((gp.gp_d, obs_d, "d", "#1f5fa8"),
                                                   (gp.gp_vs, obs_v, "v_s", "#b5561d"))):
        mu, sd = model.predict(s)
        y_all = np.concatenate([mu - sd, mu + sd, ys])
        ax = _Axes(0.0, L, float(y_all.min()), float(y_all.max()), PAD, PAD + k * (PANEL_H + PAD), PANEL_W, PANEL_H)
        out += _panel(ax, s, mu, sd, obs_s, ys, label, color)
    out.append(f'<text x="{_num(PAD)}" y="{_num(height - 10)}" font-size="12" font-family="sans-serif">'
               f's in [0, {L:.2f}] m</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def track_svg(track: TrackModel, line: RacingLine, rocs=(), ego_xy=None, opp_xy=None, scale: float = 30.0,
              jump: float = 1.0, comment: str = "") -> str:
    """Track outline, racing line, driven paths and shaded collision regions.

    ``rocs`` holds ``(c_start, c_end)`` pairs in arc length of ``line``; each
    is drawn as a polygon between the track boundaries over that interval.
    """
    left, right = track.boundaries()
    pts = np.vstack([left, right])
    xmin, ymin = pts.min(axis=0) - 1.0
    xmax, ymax = pts.max(axis=0) + 1.0
    width, height = (xmax - xmin) * scale, (ymax - ymin) * scale

    def tx(x):
        return (np.asarray(x, float) - xmin) * scale

    def ty(y):
        return (ymax - np.asarray(y, float)) * scale

    out = _header(width, height, comment)
    L = line.lap_length
    for c0, c1 in rocs:
        span = (c1 - c0) % L
        s = c0 + np.linspace(0.0, span, max(int(span / 0.1), 2))
        dl, dr = line.bounds_array(s)
        xl, yl = line.ref.to_cartesian_array(s, dl)
        xr, yr = line.ref.to_cartesian_array(s, -dr)
        poly = _points(np.concatenate([tx(xl), tx(xr[::-1])]), np.concatenate([ty(yl), ty(yr[::-1])]))
        out.append(f'<polygon class="roc" data-c-start="{c0:.3f}" data-c-end="{c1:.3f}" points="{poly}" '
                   f'fill="#e0b400" fill-opacity="0.35" stroke="none"/>')
    for b in (left, right):
        closed = np.vstack([b, b[:1]])
        out.append(f'<polyline class="boundary" points="{_points(tx(closed[:, 0]), ty(closed[:, 1]))}" '
                   f'fill="none" stroke="black" stroke-width="1.5"/>')
    lx, ly = np.append(line.x, line.x[0]), np.append(line.y, line.y[0])
    out.append(f'<polyline class="racing-line" points="{_points(tx(lx), ty(ly))}" fill="none" stroke="#999" '
               f'stroke-dasharray="4 3"/>')
    for xy, cls, color in ((opp_xy, "opponent", "#777"), (ego_xy, "ego", "#7a2bb5")):
        if xy is None or not len(xy):
            continue
        xy = np.asarray(xy, float)
        # respawns show up as jumps; start a new polyline there
        cuts = np.flatnonzero(np.hypot(*np.diff(xy, axis=0).T) > jump) + 1
        for part in np.split(xy, cuts):
            if len(part) > 1:
                out.append(f'<polyline class="{cls}" points="{_points(tx(part[:, 0]), ty(part[:, 1]))}" '
                           f'fill="none" stroke="{color}" stroke-width="1.2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
