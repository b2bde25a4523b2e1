"""Opponent behaviors, the follow-the-gap reactive driver and the observation feed."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from overtake.config import VehicleLimits
from overtake.gp import OpponentObservation
from overtake.lines import RacingLine
from overtake.track import FrenetState, OutOfDomainError, TrackModel, normalize_angle
from overtake.sim.vehicle import VehicleState, footprint

BEHAVIORS = ("racing_line", "shortest_path", "centerline", "reactive")
BEHAVIOR_ALIASES = {"I": "racing_line", "II": "shortest_path", "III": "centerline", "IV": "reactive"}


@dataclass(frozen=True)
class OpponentBehavior:
    variant: str
    speed_scaler: float

    def __post_init__(self):
        if self.variant not in BEHAVIORS:
            raise ValueError(f"unknown behavior {self.variant!r}; expected one of {BEHAVIORS}")
        if not 0.0 < self.speed_scaler <= 1.0:
            raise ValueError("speed_scaler must be in (0, 1]")

    @classmethod
    def parse(cls, name: str, speed_scaler: float) -> "OpponentBehavior":
        return cls(BEHAVIOR_ALIASES.get(name, name), speed_scaler)


def line_speed_factor(opp_line_lap_time: float, ego_lap_time: float, speed_scaler: float) -> float:
    """Multiplier on the opponent line's profile giving lap time ``ego_lap_time / speed_scaler``."""
    return speed_scaler * opp_line_lap_time / ego_lap_time


# -- observations ------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseParams:
    sigma_d: float = 0.03
    sigma_vs: float = 0.15
    dropout: float = 0.05
    rate_hz: float = 40.0
    fov_deg: float = 270.0
    max_range: float = 10.0

    def __post_init__(self):
        if self.sigma_d < 0.0 or self.sigma_vs < 0.0:
            raise ValueError("noise standard deviations must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.rate_hz <= 0.0:
            raise ValueError("rate_hz must be positive")


def frenet_state(state: VehicleState, line: RacingLine, s_hint: float | None = None) -> FrenetState:
    """Frenet state of a car on ``line``; ``v_s`` is the rate of change of ``s``."""
    s, d = line.ref.to_frenet(state.x, state.y, s_hint)
    dpsi = state.heading - line.ref.heading_at(s)
    kappa = line.ref.curvature_at(s)
    v_s = state.v * math.cos(dpsi) / (1.0 - kappa * d)
    return FrenetState(s, d, v_s, state.v * math.sin(dpsi))


def project_on_line(state: VehicleState, line: RacingLine, s_hint: float | None = None) -> tuple[float, float, float]:
    """``(s, d, v_s)`` of a car on ``line``."""
    fs = frenet_state(state, line, s_hint)
    return fs.s, fs.d, fs.v_s


def in_view(ego: VehicleState, opp: VehicleState, noise: NoiseParams) -> bool:
    dx, dy = opp.x - ego.x, opp.y - ego.y
    if dx * dx + dy * dy > noise.max_range**2:
        return False
    bearing = normalize_angle(math.atan2(dy, dx) - ego.heading)
    return abs(bearing) <= math.radians(0.5 * noise.fov_deg)


def observe_opponent(opp: VehicleState, ego: VehicleState, line: RacingLine, noise: NoiseParams,
                     rng: np.random.Generator, timestamp: float = 0.0,
                     s_hint: float | None = None) -> OpponentObservation | None:
    """Noisy Frenet observation of the opponent on the ego line, or None.

    Three random numbers are drawn on every call (dropout, d noise, v_s
    noise) so the stream stays aligned whatever the visibility.
    """
    u, n_d, n_v = rng.random(), rng.standard_normal(), rng.standard_normal()
    if u < noise.dropout or not in_view(ego, opp, noise):
        return None
    try:
        s, d, v_s = project_on_line(opp, line, s_hint)
    except OutOfDomainError:
        return None
    return OpponentObservation(s, d + noise.sigma_d * n_d, v_s + noise.sigma_vs * n_v, timestamp)


# -- follow the gap --------------------------------------------------------------------

@dataclass(frozen=True)
class FtgParams:
    fov_deg: float = 270.0
    resolution_deg: float = 1.0
    max_range: float = 8.0
    gap_threshold: float = 2.0
    lookahead: float = 1.5
    steer_speed_gain: float = 1.5
    speed_gain: float = 4.0
    v_cap: float = 5.0
    emergency_speed: float = 0.0

    @property
    def angles(self) -> np.ndarray:
        half = 0.5 * self.fov_deg
        n = int(round(self.fov_deg / self.resolution_deg)) + 1
        return np.radians(np.linspace(-half, half, n))


class WallSegments:
    """Boundary polylines as segment arrays for ray casting."""

    def __init__(self, track: TrackModel, spacing: float = 0.2):
        left, right = track.boundaries()
        step = max(int(round(spacing / track.ref.h)), 1)
        p0, p1 = [], []
        for poly in (left[::step], right[::step]):
            p0.append(poly)
            p1.append(np.roll(poly, -1, axis=0))
        self.p0 = np.vstack(p0)
        self.p1 = np.vstack(p1)
        self.mid = 0.5 * (self.p0 + self.p1)

    def near(self, x: float, y: float, radius: float) -> tuple[np.ndarray, np.ndarray]:
        m = np.hypot(self.mid[:, 0] - x, self.mid[:, 1] - y) <= radius + 0.5
        return self.p0[m], self.p1[m]


def cast_rays(x: float, y: float, angles: np.ndarray, p0: np.ndarray, p1: np.ndarray, max_range: float) -> np.ndarray:
    """Distance along each world-frame ray angle to the first segment hit (capped)."""
    rx, ry = np.cos(angles)[:, None], np.sin(angles)[:, None]
    sx, sy = (p1[:, 0] - p0[:, 0])[None, :], (p1[:, 1] - p0[:, 1])[None, :]
    qx, qy = (p0[:, 0] - x)[None, :], (p0[:, 1] - y)[None, :]
    denom = rx * sy - ry * sx
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (qx * sy - qy * sx) / denom
        u = (qx * ry - qy * rx) / denom
    hit = (np.abs(denom) > 1e-12) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
    t = np.where(hit, t, max_range)
    if t.shape[1] == 0:
        return np.full(len(angles), max_range)
    return np.minimum(t.min(axis=1), max_range)


def scan(state: VehicleState, walls: WallSegments, obstacles: list[VehicleState], limits: VehicleLimits,
         params: FtgParams) -> np.ndarray:
    """Simulated range scan from ``state`` against walls and other car bodies."""
    p0, p1 = walls.near(state.x, state.y, params.max_range)
    extra0, extra1 = [], []
    for ob in obstacles:
        corners = np.array(footprint(ob.x, ob.y, ob.heading, limits.length, limits.width))
        extra0.append(corners)
        extra1.append(np.roll(corners, -1, axis=0))
    if extra0:
        p0 = np.vstack([p0, *extra0])
        p1 = np.vstack([p1, *extra1])
    return cast_rays(state.x, state.y, params.angles + state.heading, p0, p1, params.max_range)


def widest_gap(free: np.ndarray) -> tuple[int, int] | None:
    """Inclusive index range of the longest run of True; ties go to the leftmost run."""
    best, best_len = None, 0
    start = None
    for i, f in enumerate(np.append(free, False)):
        if f and start is None:
            start = i
        elif not f and start is not None:
            if i - start >= best_len:  # later runs are further left
                best, best_len = (start, i - 1), i - start
            start = None
    return best


def reactive_opponent_control(state: VehicleState, ranges: np.ndarray, params: FtgParams,
                              limits: VehicleLimits) -> tuple[float, float]:
    """Steer to the center of the widest gap; slow down with steering magnitude.

    Ray angles run from right (negative) to left (positive). When no ray
    exceeds the gap threshold the car brakes towards ``emergency_speed``
    while turning to the longest ray.
    """
    angles = params.angles
    gap = widest_gap(ranges > params.gap_threshold)
    if gap is None:
        # longest ray, ties to the left
        target = float(angles[len(angles) - 1 - int(np.argmax(ranges[::-1]))])
        v_ref = params.emergency_speed
    else:
        target = 0.5 * float(angles[gap[0]] + angles[gap[1]])
        v_ref = None
    steer = math.atan2(2.0 * limits.wheelbase * math.sin(target), params.lookahead)
    steer = min(max(steer, -limits.steering_max), limits.steering_max)
    if v_ref is None:
        v_ref = params.v_cap / (1.0 + params.steer_speed_gain * abs(steer))
    return params.speed_gain * (v_ref - state.v), steer
