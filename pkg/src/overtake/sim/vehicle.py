"""Kinematic bicycle model and footprint collision checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

from overtake.config import VehicleLimits
from overtake.track import OutOfDomainError, TrackModel


@dataclass(frozen=True)
class VehicleState:
    """Pose of the footprint center, speed and front steering angle."""

    x: float
    y: float
    heading: float
    v: float = 0.0
    steering: float = 0.0


def step_vehicle(state: VehicleState, accel_cmd: float, steer_cmd: float, dt: float,
                 limits: VehicleLimits) -> VehicleState:
    """Advance the kinematic bicycle by ``dt`` with saturated, rate-limited inputs.

    The heading rate is ``v * tan(steering) / wheelbase``. Position moves
    along the chord at the mid-step heading, which keeps constant-steer
    circles closed to second order. A stop inside the step is resolved
    exactly so braking distances match ``v**2 / (2 a)``.
    """
    if not 0.0 < dt <= 0.05:
        raise ValueError("dt must be in (0, 0.05]")
    max_delta = limits.steering_rate_max * dt
    delta = state.steering + min(max(steer_cmd - state.steering, -max_delta), max_delta)
    delta = min(max(delta, -limits.steering_max), limits.steering_max)
    a = min(max(accel_cmd, -limits.a_lon_max), limits.a_lon_max)
    v0 = state.v
    v1 = v0 + a * dt
    if v1 < 0.0:
        dist = v0 * v0 / (-2.0 * a) if a < 0.0 else 0.0
        v1 = 0.0
    else:
        dist = 0.5 * (v0 + v1) * dt
    dpsi = dist * math.tan(delta) / limits.wheelbase
    mid = state.heading + 0.5 * dpsi
    heading = state.heading + dpsi
    heading = math.atan2(math.sin(heading), math.cos(heading))
    return VehicleState(state.x + dist * math.cos(mid), state.y + dist * math.sin(mid), heading, v1, delta)


def footprint(x: float, y: float, heading: float, length: float, width: float) -> list[tuple[float, float]]:
    """Corners of the oriented rectangle, counter-clockwise from front-left."""
    c, s = math.cos(heading), math.sin(heading)
    hl, hw = 0.5 * length, 0.5 * width
    out = []
    for a, b in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)):
        out.append((x + a * c - b * s, y + a * s + b * c))
    return out


def _project(corners, ax: float, ay: float) -> tuple[float, float]:
    vals = [px * ax + py * ay for px, py in corners]
    return min(vals), max(vals)


def obb_overlap(a: VehicleState, b: VehicleState, length: float, width: float) -> bool:
    """Separating-axis test for two equal-size oriented rectangles (touching counts)."""
    reach = math.hypot(length, width)
    if (a.x - b.x) ** 2 + (a.y - b.y) ** 2 > reach * reach:
        return False
    ca = footprint(a.x, a.y, a.heading, length, width)
    cb = footprint(b.x, b.y, b.heading, length, width)
    for psi in (a.heading, b.heading):
        for ax, ay in ((math.cos(psi), math.sin(psi)), (-math.sin(psi), math.cos(psi))):
            lo_a, hi_a = _project(ca, ax, ay)
            lo_b, hi_b = _project(cb, ax, ay)
            if hi_a < lo_b or hi_b < lo_a:
                return False
    return True


def outside_walls(state: VehicleState, track: TrackModel, limits: VehicleLimits, s_hint: float | None = None) -> bool:
    """True when any footprint corner lies beyond the left or right boundary."""
    ref = track.ref
    for px, py in footprint(state.x, state.y, state.heading, limits.length, limits.width):
        try:
            s, d = ref.to_frenet(px, py, s_hint)
        except OutOfDomainError:
            return True
        wl, wr = track.width_at(s)
        if d > wl or -d > wr:
            return True
    return False


def detect_crash(ego: VehicleState, opp: VehicleState, track: TrackModel, limits: VehicleLimits,
                 s_hint: float | None = None) -> str | None:
    """``"vehicle"`` for a body overlap, ``"wall"`` for the ego leaving the track, else None."""
    if obb_overlap(ego, opp, limits.length, limits.width):
        return "vehicle"
    if outside_walls(ego, track, limits, s_hint):
        return "wall"
    return None
