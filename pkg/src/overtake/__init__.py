"""Opponent-aware overtaking planners and a small 2D race simulator."""

from overtake.config import VehicleLimits
from overtake.track import (
    CartesianPose,
    FrenetState,
    TrackModel,
    build_track,
    cartesian_to_frenet,
    curvature_at,
    frenet_to_cartesian,
    load_track,
    wrap_s,
)

__all__ = [
    "CartesianPose",
    "FrenetState",
    "TrackModel",
    "VehicleLimits",
    "build_track",
    "cartesian_to_frenet",
    "curvature_at",
    "frenet_to_cartesian",
    "load_track",
    "wrap_s",
]
