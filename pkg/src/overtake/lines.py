"""Reference lines for the ego and the opponent behaviors.

Three generators: the track centerline, a shortest path and a minimum
curvature line. The last two optimize lateral offsets from the centerline
under box bounds with a bounded nonlinear least-squares solver, then attach a
lap-periodic velocity profile.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import least_squares
from scipy.sparse import lil_matrix

from overtake.config import VehicleLimits
from overtake.track import RefLine, TrackModel

CSV_HEADER = ["s", "x", "y", "heading", "kappa", "v", "d_left", "d_right"]
OPT_STATION_SPACING = 0.4


class InfeasibleMarginError(ValueError):
    pass


@dataclass(frozen=True)
class RacingLine:
    """A closed line with attached speed profile and boundary distances."""

    ref: RefLine = field(repr=False)
    s: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    heading: np.ndarray = field(repr=False)
    kappa: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    d_left: np.ndarray = field(repr=False)
    d_right: np.ndarray = field(repr=False)
    lap_length: float = 0.0
    name: str = "line"

    def __post_init__(self):
        object.__setattr__(self, "_v_list", np.asarray(self.v, dtype=float).tolist())
        object.__setattr__(self, "_dl_list", np.asarray(self.d_left, dtype=float).tolist())
        object.__setattr__(self, "_dr_list", np.asarray(self.d_right, dtype=float).tolist())

    def _lerp(self, values: list, s: float) -> float:
        k, t = self.ref._segment(s)
        w = t * self.ref._inv_h
        k1 = k + 1 if k + 1 < self.ref.n else 0
        return (1.0 - w) * values[k] + w * values[k1]

    def speed_at(self, s: float) -> float:
        return self._lerp(self._v_list, s)

    def bounds_at(self, s: float) -> tuple[float, float]:
        """Distances ``(d_left, d_right)`` to the boundaries at ``s``."""
        return self._lerp(self._dl_list, s), self._lerp(self._dr_list, s)

    def _interp(self, values: np.ndarray, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float) % self.lap_length
        grid = np.append(self.s, self.lap_length)
        return np.interp(s, grid, np.append(values, values[0]))

    def speed_array(self, s: np.ndarray) -> np.ndarray:
        return self._interp(self.v, s)

    def bounds_array(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self._interp(self.d_left, s), self._interp(self.d_right, s)

    def kappa_array(self, s: np.ndarray) -> np.ndarray:
        return self._interp(self.kappa, s)

    @property
    def lap_time(self) -> float:
        inv = 1.0 / self.v
        return float(np.sum(0.5 * (inv + np.roll(inv, -1))) * self.ref.h)

    def scaled(self, factor: float) -> "RacingLine":
        """Same line with every speed multiplied by ``factor``."""
        return replace(self, v=self.v * factor)

    def to_csv(self, path: str | Path, header_comment: str = "") -> None:
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for row in zip(self.s, self.x, self.y, self.heading, self.kappa, self.v, self.d_left, self.d_right):
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path: str | Path, name: str = "line") -> "RacingLine":
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
        if rows[0] != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {rows[0]}")
        data = np.array(rows[1:], dtype=float)
        s = data[:, 0]
        h = s[1] - s[0]
        length = float(s[-1] + h)
        ref = RefLine(data[:, 1:3], length, max_offset=2.0 * float(np.max(data[:, 6] + data[:, 7])))
        return cls(ref, s, data[:, 1], data[:, 2], data[:, 3], data[:, 4], data[:, 5], data[:, 6], data[:, 7], length, name)


def velocity_profile(kappa: np.ndarray, ds: float, limits: VehicleLimits) -> np.ndarray:
    """Curvature-limited speed with lap-periodic accel/decel passes."""
    kappa = np.asarray(kappa, dtype=float)
    with np.errstate(divide="ignore"):
        v_lim = np.minimum(limits.v_max, np.sqrt(limits.a_lat_max / np.abs(kappa)))
    n = len(v_lim)
    start = int(np.argmin(v_lim))
    order = np.roll(np.arange(n), -start)
    v = v_lim[order].tolist()
    lim = v_lim[order].tolist()
    two_a_ds = 2.0 * limits.a_lon_max * ds
    for i in range(1, n):
        v[i] = min(lim[i], math.sqrt(v[i - 1] ** 2 + two_a_ds))
    # wrap: the segment after the last point is the start (global minimum)
    for i in range(n - 1, -1, -1):
        nxt = v[i + 1] if i + 1 < n else v[0]
        v[i] = min(v[i], math.sqrt(nxt**2 + two_a_ds))
    out = np.empty(n)
    out[order] = v
    return out


def with_velocity_profile(line: RacingLine, limits: VehicleLimits) -> RacingLine:
    return replace(line, v=velocity_profile(line.kappa, line.ref.h, limits))


def offset_line(track: TrackModel, offsets: np.ndarray, limits: VehicleLimits, name: str = "line") -> RacingLine:
    """Racing line at lateral ``offsets`` (one per centerline sample)."""
    offsets = np.asarray(offsets, dtype=float)
    cref = track.ref
    if np.allclose(offsets, 0.0):
        ref = cref
        s_c, alpha = cref.s, np.zeros(cref.n)
    else:
        px, py = cref.to_cartesian_array(cref.s, offsets)
        ref = RefLine.from_polygon(np.column_stack([px, py]))
        s_c = np.empty(ref.n)
        alpha = np.empty(ref.n)
        hint = 0.0
        for i, (x, y) in enumerate(ref.points):
            hint, alpha[i] = cref.to_frenet(float(x), float(y), hint)
            s_c[i] = hint
    wl, wr = track.widths_array(s_c)
    d_left, d_right = wl - alpha, wr + alpha
    ref.max_offset = 2.0 * float(np.max(d_left + d_right))
    v = velocity_profile(ref.kappa, ref.h, limits)
    return RacingLine(ref, ref.s.copy(), ref.points[:, 0].copy(), ref.points[:, 1].copy(), ref.heading.copy(),
                      ref.kappa.copy(), v, d_left, d_right, ref.length, name)


def centerline_line(track: TrackModel, limits: VehicleLimits = VehicleLimits()) -> RacingLine:
    return offset_line(track, np.zeros(track.ref.n), limits, name="centerline")


def _stations(track: TrackModel, margin: float):
    m = max(int(math.ceil(track.total_length / OPT_STATION_SPACING)), 20)
    s = np.arange(m) * (track.total_length / m)
    p = track.ref.eval_array(s)
    t = track.ref.eval_array(s, 1)
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    normal = np.column_stack([-t[:, 1], t[:, 0]])
    wl, wr = track.widths_array(s)
    lo, hi = -(wr - margin), wl - margin
    if np.any(hi <= 0.0) or np.any(lo >= 0.0):
        raise InfeasibleMarginError(f"margin {margin} m leaves no room inside the track")
    return s, p, normal, lo, hi


def _cyclic_sparsity(m: int, offsets: tuple[int, ...]):
    sp = lil_matrix((m, m), dtype=int)
    for i in range(m):
        for o in offsets:
            sp[i, (i + o) % m] = 1
    return sp


def curvature_residuals(alpha: np.ndarray, p: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Residuals whose squared sum approximates the integral of curvature squared."""
    q = p + alpha[:, None] * normal
    e = np.roll(q, -1, axis=0) - q
    ell = np.linalg.norm(e, axis=1)
    e_prev = np.roll(e, 1, axis=0)
    cross = e_prev[:, 0] * e[:, 1] - e_prev[:, 1] * e[:, 0]
    dot = np.einsum("ij,ij->i", e_prev, e)
    theta = np.arctan2(cross, dot)
    ds = 0.5 * (ell + np.roll(ell, 1))
    return theta / np.sqrt(ds)


def _length_residuals(alpha: np.ndarray, p: np.ndarray, normal: np.ndarray) -> np.ndarray:
    q = p + alpha[:, None] * normal
    return np.sqrt(np.linalg.norm(np.roll(q, -1, axis=0) - q, axis=1))


def _optimize_offsets(track: TrackModel, margin: float, residuals, sparsity_offsets) -> np.ndarray:
    s, p, normal, lo, hi = _stations(track, margin)
    m = len(s)
    x0 = np.clip(np.zeros(m), lo + 1e-9, hi - 1e-9)
    res = least_squares(
        residuals, x0, bounds=(lo, hi), args=(p, normal), method="trf",
        jac_sparsity=_cyclic_sparsity(m, sparsity_offsets), xtol=1e-10, ftol=1e-12, gtol=1e-10, max_nfev=500,
    )
    alpha = res.x
    spline = CubicSpline(np.append(s, track.total_length), np.append(alpha, alpha[0]), bc_type="periodic")
    wl, wr = track.w_left, track.w_right
    return np.clip(spline(track.ref.s), -(wr - margin), wl - margin)


def shortest_path_line(track: TrackModel, margin: float = 0.10, limits: VehicleLimits = VehicleLimits()) -> RacingLine:
    """Line of (locally) minimal length with ``|d| <= width - margin``."""
    alpha = _optimize_offsets(track, margin, _length_residuals, (0, 1))
    return offset_line(track, alpha, limits, name="shortest_path")


def min_curvature_line(track: TrackModel, margin: float = 0.10, limits: VehicleLimits = VehicleLimits()) -> RacingLine:
    """Line minimizing the integral of squared curvature inside the margins."""
    alpha = _optimize_offsets(track, margin, curvature_residuals, (-1, 0, 1))
    return offset_line(track, alpha, limits, name="min_curvature")
