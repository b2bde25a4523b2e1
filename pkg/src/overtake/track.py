"""Closed track geometry and Frenet <-> Cartesian conversion.

A reference curve is stored as a periodic cubic spline over arc length,
resampled to a uniform spacing of at most ``MAX_SPACING`` metres. Lateral
offsets follow the usual convention: ``d > 0`` is left of the direction of
travel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

MAX_SPACING = 0.1
CLOSURE_TOL = 1e-6
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


class TrackError(ValueError):
    """Invalid track input."""


class OutOfDomainError(ValueError):
    """A query point lies too far from the reference curve to project."""


@dataclass(frozen=True)
class FrenetState:
    s: float
    d: float
    v_s: float = 0.0
    v_d: float = 0.0


@dataclass(frozen=True)
class CartesianPose:
    x: float
    y: float
    heading: float = 0.0


def normalize_angle(a: float) -> float:
    """Map an angle to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def forward_distance(s_from: float, s_to: float, length: float) -> float:
    """Distance travelled forward along a loop of ``length`` from ``s_from`` to ``s_to``."""
    return (s_to - s_from) % length


def signed_gap(s_from: float, s_to: float, length: float) -> float:
    """Wrapped difference ``s_to - s_from`` in [-length/2, length/2)."""
    half = 0.5 * length
    return (s_to - s_from + half) % length - half


def _moving_average_circular(a: np.ndarray, window: int) -> np.ndarray:
    half = window // 2
    padded = np.concatenate([a[-half:], a, a[:half]])
    kernel = np.full(window, 1.0 / window)
    return np.convolve(padded, kernel, mode="valid")


class RefLine:
    """Closed curve with uniform arc-length samples and a periodic spline.

    Built through :meth:`from_polygon`; ``points`` passed to the constructor
    must already be uniformly spaced in arc length (open, no repeated end).
    """

    def __init__(self, points: np.ndarray, length: float, max_offset: float = math.inf):
        points = np.asarray(points, dtype=float)
        n = len(points)
        self.n = n
        self.length = float(length)
        self.h = self.length / n
        self._inv_h = 1.0 / self.h
        self.max_offset = max_offset
        self.s = np.arange(n) * self.h
        closed = np.vstack([points, points[:1]])
        s_ext = np.append(self.s, self.length)
        self._spline = CubicSpline(s_ext, closed, bc_type="periodic")
        c = self._spline.c  # (4, n, 2), highest power first
        self._c = c
        self._cx = [tuple(c[:, k, 0].tolist()) for k in range(n)]
        self._cy = [tuple(c[:, k, 1].tolist()) for k in range(n)]
        self.points = points
        d1 = self._spline(self.s, 1)
        self.heading = np.arctan2(d1[:, 1], d1[:, 0])
        dpsi = np.angle(np.exp(1j * (np.roll(self.heading, -1) - np.roll(self.heading, 1))))
        self.kappa = _moving_average_circular(dpsi / (2.0 * self.h), 5)
        self._kappa_list = self.kappa.tolist()
        self._tree = cKDTree(points)

    @classmethod
    def from_polygon(cls, points: np.ndarray, spacing: float = MAX_SPACING, max_offset: float = math.inf) -> "RefLine":
        """Resample an open polygon (implicitly closed) to uniform arc length."""
        pts = np.asarray(points, dtype=float)
        u, spline, seg_len = _chord_spline(pts)
        length = float(np.sum(seg_len))
        n = max(int(math.ceil(length / spacing)), 3)
        u_fine, s_fine = _arc_table(spline, u)
        targets = np.arange(n) * (length / n)
        u_t = np.interp(targets, s_fine, u_fine)
        return cls(spline(u_t), length, max_offset=max_offset)

    # -- scalar evaluation -------------------------------------------------
    def wrap(self, s: float) -> float:
        s = s % self.length
        return 0.0 if s >= self.length else s

    def _segment(self, s: float) -> tuple[int, float]:
        s = s % self.length
        k = int(s * self._inv_h)
        if k >= self.n:
            k = self.n - 1
        return k, s - k * self.h

    def eval(self, s: float) -> tuple[float, float, float, float, float, float]:
        """Position, first and second derivative at ``s``."""
        k, t = self._segment(s)
        a, b, c, d = self._cx[k]
        e, f, g, h = self._cy[k]
        x = ((a * t + b) * t + c) * t + d
        y = ((e * t + f) * t + g) * t + h
        dx = (3.0 * a * t + 2.0 * b) * t + c
        dy = (3.0 * e * t + 2.0 * f) * t + g
        return x, y, dx, dy, 6.0 * a * t + 2.0 * b, 6.0 * e * t + 2.0 * f

    def point(self, s: float) -> tuple[float, float]:
        k, t = self._segment(s)
        a, b, c, d = self._cx[k]
        e, f, g, h = self._cy[k]
        return ((a * t + b) * t + c) * t + d, ((e * t + f) * t + g) * t + h

    def to_cartesian(self, s: float, d: float) -> tuple[float, float, float]:
        x, y, dx, dy, _, _ = self.eval(s)
        norm = math.hypot(dx, dy)
        tx, ty = dx / norm, dy / norm
        return x - d * ty, y + d * tx, math.atan2(ty, tx)

    def heading_at(self, s: float) -> float:
        _, _, dx, dy, _, _ = self.eval(s)
        return math.atan2(dy, dx)

    def curvature_at(self, s: float) -> float:
        k, t = self._segment(s)
        w = t * self._inv_h
        k1 = k + 1 if k + 1 < self.n else 0
        return (1.0 - w) * self._kappa_list[k] + w * self._kappa_list[k1]

    def nearest_sample(self, x: float, y: float) -> float:
        _, idx = self._tree.query((x, y))
        return float(self.s[idx])

    def to_frenet(self, x: float, y: float, s_hint: float | None = None) -> tuple[float, float]:
        """Project a point; returns ``(s, d)`` with ``s`` in [0, length)."""
        s = self.nearest_sample(x, y) if s_hint is None else s_hint
        s, ok = self._newton(x, y, s)
        if not ok and s_hint is not None:
            s, ok = self._newton(x, y, self.nearest_sample(x, y))
        px, py, dx, dy, _, _ = self.eval(s)
        norm = math.hypot(dx, dy)
        d = (dx * (y - py) - dy * (x - px)) / norm
        if abs(d) > self.max_offset:
            raise OutOfDomainError(f"point ({x:.3f}, {y:.3f}) is {abs(d):.3f} m from the reference line")
        return float(self.wrap(s)), float(d)

    def _newton(self, x: float, y: float, s: float) -> tuple[float, bool]:
        step_cap = 4.0 * self.h
        for _ in range(30):
            px, py, dx, dy, ddx, ddy = self.eval(s)
            rx, ry = px - x, py - y
            g = rx * dx + ry * dy
            gp = dx * dx + dy * dy + rx * ddx + ry * ddy
            if gp <= 1e-9:
                return s, False
            step = -g / gp
            if step > step_cap:
                step = step_cap
            elif step < -step_cap:
                step = -step_cap
            s += step
            if abs(step) < 1e-12:
                return s, True
        return s, abs(step) < 1e-9

    # -- vectorized --------------------------------------------------------
    def eval_array(self, s: np.ndarray, nu: int = 0) -> np.ndarray:
        s = np.asarray(s, dtype=float) % self.length
        return self._spline(s, nu)

    def to_cartesian_array(self, s: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p = self.eval_array(s)
        t = self.eval_array(s, 1)
        t = t / np.linalg.norm(t, axis=-1, keepdims=True)
        d = np.asarray(d, dtype=float)
        return p[..., 0] - d * t[..., 1], p[..., 1] + d * t[..., 0]

    def curvature_array(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float) % self.length
        return np.interp(s, np.append(self.s, self.length), np.append(self.kappa, self.kappa[0]))


def _chord_spline(pts: np.ndarray) -> tuple[np.ndarray, CubicSpline, np.ndarray]:
    """Periodic spline through an open polygon, chord-length parameterized.

    Returns the knot parameters, the spline, and the arc length of each
    spline segment (Gauss-Legendre quadrature of the speed).
    """
    chords = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
    if np.any(chords <= 0.0):
        raise TrackError("consecutive centerline points coincide")
    u = np.concatenate([[0.0], np.cumsum(chords)])
    spline = CubicSpline(u, np.vstack([pts, pts[:1]]), bc_type="periodic")
    a, b = u[:-1], u[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    speed = np.linalg.norm(spline(nodes, 1), axis=-1)
    seg_len = half * (speed @ _GL_WEIGHTS)
    return u, spline, seg_len


def _arc_table(spline: CubicSpline, u: np.ndarray, sub: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Dense monotone table of (parameter, arc length)."""
    u_fine = np.concatenate([np.linspace(u[i], u[i + 1], sub, endpoint=False) for i in range(len(u) - 1)] + [u[-1:]])
    a, b = u_fine[:-1], u_fine[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    speed = np.linalg.norm(spline(nodes, 1), axis=-1)
    s_fine = np.concatenate([[0.0], np.cumsum(half * (speed @ _GL_WEIGHTS))])
    return u_fine, s_fine


def _segments_intersect(pts: np.ndarray) -> bool:
    """True if any two non-adjacent edges of the closed polygon cross."""
    m = len(pts)
    p = pts
    q = np.roll(pts, -1, axis=0)

    def orient(ax, ay, bx, by, cx, cy):
        return np.sign((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))

    idx = np.arange(m)
    chunk = max(1, 2_000_000 // m)
    for start in range(0, m, chunk):
        i = idx[start : start + chunk, None]
        j = idx[None, :]
        adjacent = (j == i) | (j == (i + 1) % m) | (j == (i - 1) % m)
        p1x, p1y = p[i, 0], p[i, 1]
        q1x, q1y = q[i, 0], q[i, 1]
        p2x, p2y = p[j, 0], p[j, 1]
        q2x, q2y = q[j, 0], q[j, 1]
        o1 = orient(p1x, p1y, q1x, q1y, p2x, p2y)
        o2 = orient(p1x, p1y, q1x, q1y, q2x, q2y)
        o3 = orient(p2x, p2y, q2x, q2y, p1x, p1y)
        o4 = orient(p2x, p2y, q2x, q2y, q1x, q1y)
        hit = (o1 * o2 < 0) & (o3 * o4 < 0) & ~adjacent
        if hit.any():
            return True
    return False


@dataclass(frozen=True)
class TrackModel:
    """Closed track: centerline reference plus left/right widths per sample."""

    ref: RefLine = field(repr=False)
    centerline_points: np.ndarray = field(repr=False)
    total_length: float = 0.0
    widths: np.ndarray = field(repr=False, default=None)  # (n, 2): left, right

    @property
    def w_left(self) -> np.ndarray:
        return self.widths[:, 0]

    @property
    def w_right(self) -> np.ndarray:
        return self.widths[:, 1]

    def width_at(self, s: float) -> tuple[float, float]:
        k, t = self.ref._segment(s)
        w = t * self.ref._inv_h
        k1 = k + 1 if k + 1 < self.ref.n else 0
        wl = (1.0 - w) * self.widths[k, 0] + w * self.widths[k1, 0]
        wr = (1.0 - w) * self.widths[k, 1] + w * self.widths[k1, 1]
        return wl, wr

    def widths_array(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = np.asarray(s, dtype=float) % self.total_length
        grid = np.append(self.ref.s, self.total_length)
        wl = np.interp(s, grid, np.append(self.widths[:, 0], self.widths[0, 0]))
        wr = np.interp(s, grid, np.append(self.widths[:, 1], self.widths[0, 1]))
        return wl, wr

    def boundaries(self) -> tuple[np.ndarray, np.ndarray]:
        """Left and right boundary polylines, sampled at the centerline samples."""
        lx, ly = self.ref.to_cartesian_array(self.ref.s, self.widths[:, 0])
        rx, ry = self.ref.to_cartesian_array(self.ref.s, -self.widths[:, 1])
        return np.column_stack([lx, ly]), np.column_stack([rx, ry])


def build_track(centerline: Sequence[Sequence[float]], widths: Sequence[Sequence[float]]) -> TrackModel:
    """Build a :class:`TrackModel` from a closed centerline polygon.

    Parameters
    ----------
    centerline:
        Ordered ``(x, y)`` points; the last point must repeat the first.
    widths:
        ``(w_left, w_right)`` per centerline point, strictly positive.

    Raises
    ------
    TrackError
        If the polygon is not closed, has fewer than 20 distinct points,
        has non-positive widths, or intersects itself.
    """
    pts = np.asarray(centerline, dtype=float)
    w = np.asarray(widths, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise TrackError("centerline must be a list of (x, y) points")
    if w.shape != pts.shape:
        raise TrackError("need one (w_left, w_right) pair per centerline point")
    if len(pts) < 2 or np.linalg.norm(pts[0] - pts[-1]) > CLOSURE_TOL:
        raise TrackError("centerline is not closed (first and last points differ)")
    pts, w = pts[:-1], w[:-1]
    if len(pts) < 20:
        raise TrackError(f"need at least 20 distinct points, got {len(pts)}")
    if np.any(w <= 0.0):
        raise TrackError("track widths must be strictly positive")
    if _segments_intersect(pts):
        raise TrackError("centerline intersects itself")

    u, spline, seg_len = _chord_spline(pts)
    s_knots = np.concatenate([[0.0], np.cumsum(seg_len)])
    length = float(s_knots[-1])
    n = int(math.ceil(length / MAX_SPACING))
    u_fine, s_fine = _arc_table(spline, u)
    s_new = np.arange(n) * (length / n)
    resampled = spline(np.interp(s_new, s_fine, u_fine))
    w_closed = np.vstack([w, w[:1]])
    w_new = np.column_stack([np.interp(s_new, s_knots, w_closed[:, i]) for i in range(2)])
    max_offset = 2.0 * float(np.max(w_new))
    ref = RefLine(resampled, length, max_offset=max_offset)
    return TrackModel(ref=ref, centerline_points=resampled, total_length=length, widths=w_new)


def load_track(path: str | Path) -> TrackModel:
    """Read a ``x y w_left w_right`` text file (``#`` starts a comment)."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise TrackError(f"{path}:{lineno}: expected 4 columns, got {len(parts)}")
        rows.append([float(v) for v in parts])
    if not rows:
        raise TrackError(f"{path}: no waypoints")
    data = np.asarray(rows)
    return build_track(data[:, :2], data[:, 2:])


def save_track(path: str | Path, centerline: np.ndarray, widths: np.ndarray, comment: str = "") -> None:
    lines = [f"# {c}" for c in comment.splitlines()] + ["# x y w_left w_right"]
    for (x, y), (wl, wr) in zip(centerline, widths):
        lines.append(f"{x:.6f} {y:.6f} {wl:.4f} {wr:.4f}")
    Path(path).write_text("\n".join(lines) + "\n")


def _ref(obj) -> RefLine:
    return obj if isinstance(obj, RefLine) else obj.ref


def wrap_s(track, s: float) -> float:
    return _ref(track).wrap(s)


def cartesian_to_frenet(track, pose: CartesianPose, s_hint: float | None = None) -> FrenetState:
    """Project a pose onto the reference line of a track or racing line."""
    s, d = _ref(track).to_frenet(pose.x, pose.y, s_hint)
    return FrenetState(s=s, d=d)


def frenet_to_cartesian(track, s: float, d: float) -> CartesianPose:
    x, y, heading = _ref(track).to_cartesian(s, d)
    return CartesianPose(x, y, normalize_angle(heading))


def curvature_at(track, s: float) -> float:
    return _ref(track).curvature_at(s)
