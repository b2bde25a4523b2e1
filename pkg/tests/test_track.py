import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import circle_points, load
from overtake.track import (
    CartesianPose,
    OutOfDomainError,
    TrackError,
    build_track,
    cartesian_to_frenet,
    curvature_at,
    forward_distance,
    frenet_to_cartesian,
    signed_gap,
    wrap_s,
)


def circle_track(radius: float, half_width: float = 0.5):
    pts = circle_points(radius)
    return build_track(pts, np.full_like(pts, half_width))


@pytest.mark.parametrize("radius", [1.0, 2.0, 5.0])
def test_circle_curvature(radius):
    track = circle_track(radius, half_width=0.3)
    s = np.linspace(0.0, track.total_length, 50, endpoint=False)
    kappa = np.array([curvature_at(track, v) for v in s])
    assert np.all(np.abs(kappa * radius - 1.0) < 0.05)
    assert track.total_length == pytest.approx(2.0 * math.pi * radius, rel=1e-4)


@pytest.mark.parametrize("name", ["oval_chicane", "kidney"])
def test_round_trip_shipped_tracks(name):
    track = load(name)
    rng = np.random.default_rng(7)
    wl, wr = track.w_left.min(), track.w_right.min()
    worst = 0.0
    for _ in range(200):
        s = rng.uniform(0.0, track.total_length)
        d = rng.uniform(-0.9 * wr, 0.9 * wl)
        pose = frenet_to_cartesian(track, s, d)
        back = cartesian_to_frenet(track, pose)
        p2 = frenet_to_cartesian(track, back.s, back.d)
        worst = max(worst, math.hypot(p2.x - pose.x, p2.y - pose.y), abs(back.d - d),
                    abs(signed_gap(s, back.s, track.total_length)))
    assert worst < 1e-5


@settings(max_examples=60, deadline=None)
@given(s=st.floats(0.0, 50.0), frac=st.floats(-0.9, 0.9))
def test_round_trip_property(s, frac):
    track = load("oval_chicane")
    s = s % track.total_length
    wl, wr = track.width_at(s)
    d = frac * (wl if frac > 0 else wr)
    back = cartesian_to_frenet(track, frenet_to_cartesian(track, s, d))
    assert abs(signed_gap(s, back.s, track.total_length)) < 1e-5
    assert back.d == pytest.approx(d, abs=1e-5)


def test_left_is_positive():
    track = circle_track(2.0)  # counter-clockwise, so left points to the center
    pose = frenet_to_cartesian(track, 0.0, 0.3)
    assert math.hypot(pose.x, pose.y) == pytest.approx(1.7, abs=1e-4)


def test_hint_does_not_change_projection(oval):
    pose = frenet_to_cartesian(oval, 12.3, 0.2)
    a = cartesian_to_frenet(oval, pose)
    b = cartesian_to_frenet(oval, pose, s_hint=12.0)
    assert a.s == pytest.approx(b.s, abs=1e-9) and a.d == pytest.approx(b.d, abs=1e-9)


def test_far_point_is_out_of_domain(oval):
    with pytest.raises(OutOfDomainError):
        cartesian_to_frenet(oval, CartesianPose(1e3, 1e3, 0.0))


@settings(max_examples=100, deadline=None)
@given(s=st.floats(-1e4, 1e4, allow_nan=False))
def test_wrap_range(s):
    track = load("kidney")
    w = wrap_s(track, s)
    assert 0.0 <= w < track.total_length


@settings(max_examples=100, deadline=None)
@given(a=st.floats(0.0, 99.999), b=st.floats(0.0, 99.999))
def test_gap_helpers(a, b):
    L = 100.0
    g = signed_gap(a, b, L)
    assert -L / 2 <= g <= L / 2
    assert forward_distance(a, b, L) == pytest.approx((b - a) % L, abs=1e-9)
    assert (a + g - b) % L == pytest.approx(0.0, abs=1e-9) or (a + g - b) % L == pytest.approx(L, abs=1e-9)


def test_rejects_open_polygon():
    pts = circle_points(2.0)[:-1]
    with pytest.raises(TrackError, match="not closed"):
        build_track(pts, np.full_like(pts, 0.5))


def test_rejects_self_intersection():
    t = np.linspace(0.0, 2.0 * math.pi, 101) + 0.01  # no vertex on the crossing
    pts = np.column_stack([np.sin(t), np.sin(t) * np.cos(t)])  # figure eight
    with pytest.raises(TrackError, match="intersects"):
        build_track(pts, np.full_like(pts, 0.2))


def test_rejects_bad_widths():
    pts = circle_points(2.0)
    w = np.full_like(pts, 0.5)
    w[3, 1] = 0.0
    with pytest.raises(TrackError, match="positive"):
        build_track(pts, w)
