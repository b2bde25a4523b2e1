"""Pure-pursuit tracking of a racing line, optionally shifted by an evasion trajectory."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from overtake.config import VehicleLimits
from overtake.lines import RacingLine
from overtake.planner import EvasionTrajectory
from overtake.track import forward_distance
from overtake.sim.vehicle import VehicleState


class TrackingError(RuntimeError):
    pass


@dataclass(frozen=True)
class PursuitParams:
    lookahead_min: float = 0.5
    lookahead_gain: float = 0.12   # seconds of travel
    speed_gain: float = 4.0


def path_speed_cap(line: RacingLine, traj: EvasionTrajectory, limits: VehicleLimits, scale: float = 1.0) -> np.ndarray:
    """Speed limit along an evasion trajectory from its Cartesian curvature.

    The cap is ``min(scale * v_line, sqrt(a_lat / |kappa|))`` followed by a
    backward pass at ``a_lon_max`` so the car can brake into tight sections.
    """
    x, y = line.ref.to_cartesian_array(traj.s, traj.d)
    ax, ay = x[:-2] - x[1:-1], y[:-2] - y[1:-1]
    bx, by = x[2:] - x[1:-1], y[2:] - y[1:-1]
    cross = np.abs(ax * by - ay * bx)
    la, lb = np.hypot(ax, ay), np.hypot(bx, by)
    lc = np.hypot(x[2:] - x[:-2], y[2:] - y[:-2])
    kappa = 2.0 * cross / np.maximum(la * lb * lc, 1e-12)
    kappa = np.concatenate([kappa[:1], kappa, kappa[-1:]])
    with np.errstate(divide="ignore"):
        v = np.minimum(scale * line.speed_array(traj.s), np.sqrt(limits.a_lat_max / kappa))
    ds = np.hypot(np.diff(x), np.diff(y))
    for i in range(len(v) - 2, -1, -1):
        v[i] = min(v[i], math.sqrt(v[i + 1] ** 2 + 2.0 * limits.a_lon_max * ds[i]))
    return v


class FollowPath:
    """A racing line with a speed scale and an optional lateral offset profile."""

    def __init__(self, line: RacingLine, speed_scale: float = 1.0):
        self.line = line
        self.speed_scale = speed_scale
        self.traj: EvasionTrajectory | None = None
        self._rel: list[float] = []
        self._d: list[float] = []
        self._v: list[float] = []

    def set_trajectory(self, traj: EvasionTrajectory | None, limits: VehicleLimits) -> None:
        self.traj = traj
        if traj is None:
            self._rel, self._d, self._v = [], [], []
            return
        self._rel = (traj.s - traj.s[0]).tolist()
        self._d = traj.d.tolist()
        self._v = path_speed_cap(self.line, traj, limits, self.speed_scale).tolist()

    def _locate(self, s: float):
        if self.traj is None:
            return None
        rel = forward_distance(self.traj.s[0], s, self.line.lap_length)
        if rel > self._rel[-1]:
            return None
        k = min(max(bisect.bisect_right(self._rel, rel) - 1, 0), len(self._rel) - 2)
        w = (rel - self._rel[k]) / (self._rel[k + 1] - self._rel[k])
        return k, w

    def offset(self, s: float) -> float:
        loc = self._locate(s)
        if loc is None:
            return 0.0
        k, w = loc
        return (1.0 - w) * self._d[k] + w * self._d[k + 1]

    def speed(self, s: float) -> float:
        v_line = self.speed_scale * self.line.speed_at(s)
        loc = self._locate(s)
        if loc is None:
            return v_line
        k, w = loc
        return min(v_line, (1.0 - w) * self._v[k] + w * self._v[k + 1])

    def finished(self, s: float) -> bool:
        return self.traj is None or self._locate(s) is None


def pure_pursuit_control(state: VehicleState, path: FollowPath, s: float, params: PursuitParams,
                         limits: VehicleLimits, v_limit: float | None = None) -> tuple[float, float]:
    """Steering towards the path point one lookahead ahead, P-control on speed.

    ``s`` is the car's projection on ``path.line``. ``v_limit`` further caps
    the commanded speed (used for gap keeping).
    """
    lookahead = max(params.lookahead_min, params.lookahead_gain * state.v)
    s_t = s + lookahead
    x_t, y_t, _ = path.line.ref.to_cartesian(s_t, path.offset(s_t))
    dx, dy = x_t - state.x, y_t - state.y
    dist = math.hypot(dx, dy)
    if dist > 2.0 * lookahead:
        raise TrackingError(f"path is {dist:.2f} m away (lookahead {lookahead:.2f} m)")
    alpha = math.atan2(dy, dx) - state.heading
    steer = math.atan2(2.0 * limits.wheelbase * math.sin(alpha), max(dist, 1e-6))
    v_ref = path.speed(s)
    if v_limit is not None:
        v_ref = min(v_ref, max(v_limit, 0.0))
    return params.speed_gain * (v_ref - state.v), steer
