import math

import numpy as np
import pytest

from overtake.config import VehicleLimits
from overtake.planner import LEFT, guard_trajectory
from overtake.sim.control import FollowPath, PursuitParams, TrackingError, path_speed_cap, pure_pursuit_control
from overtake.sim.opponent import (
    FtgParams,
    NoiseParams,
    WallSegments,
    cast_rays,
    frenet_state,
    observe_opponent,
    reactive_opponent_control,
    scan,
    widest_gap,
)
from overtake.sim.vehicle import VehicleState, outside_walls, step_vehicle

LIM = VehicleLimits()


def drive(line, path, state, seconds, dt=0.01):
    s = line.ref.to_frenet(state.x, state.y)[0]
    for _ in range(int(seconds / dt)):
        accel, steer = pure_pursuit_control(state, path, s, PursuitParams(), LIM)
        state = step_vehicle(state, accel, steer, dt, LIM)
        s = line.ref.to_frenet(state.x, state.y, s)[0]
    return state, s


@pytest.mark.parametrize("d0", [-0.3, 0.3])
def test_pursuit_converges_to_line(oval_line, d0):
    x, y, psi = oval_line.ref.to_cartesian(2.0, d0)
    state, s = drive(oval_line, FollowPath(oval_line, 0.6), VehicleState(x, y, psi, 1.0), 8.0)
    assert abs(oval_line.ref.to_frenet(state.x, state.y, s)[1]) < 0.05


def test_pursuit_follows_offset_profile(oval_line):
    path = FollowPath(oval_line, 0.5)
    traj = guard_trajectory(None, 3.0, 0.4, LEFT, hold=8.0, ramp=3.0, line=oval_line)
    path.set_trajectory(traj, LIM)
    x, y, psi = oval_line.ref.to_cartesian(3.0, 0.4)
    state, s = drive(oval_line, path, VehicleState(x, y, psi, 1.0), 2.0)
    assert oval_line.ref.to_frenet(state.x, state.y, s)[1] == pytest.approx(path.offset(s), abs=0.05)


def test_far_from_path_raises(oval_line):
    x, y, psi = oval_line.ref.to_cartesian(2.0, 0.0)
    state = VehicleState(x + 5.0, y + 5.0, psi, 1.0)
    with pytest.raises(TrackingError):
        pure_pursuit_control(state, FollowPath(oval_line), 2.0, PursuitParams(), LIM)


def test_speed_cap_respects_lateral_limit(oval_line):
    traj = guard_trajectory(None, 3.0, 0.6, LEFT, hold=0.5, ramp=1.0, line=oval_line)
    v = path_speed_cap(oval_line, traj, LIM)
    assert np.all(v <= oval_line.speed_array(traj.s) + 1e-12)
    assert np.all(np.isfinite(v)) and np.all(v > 0)
    x, y = oval_line.ref.to_cartesian_array(traj.s, traj.d)
    ds = np.hypot(np.diff(x), np.diff(y))
    assert np.all(v[:-1] ** 2 <= v[1:] ** 2 + 2 * LIM.a_lon_max * ds + 1e-9)  # can always brake in time


# -- opponent ----------------------------------------------------------------------

def test_widest_gap_cases():
    assert widest_gap(np.array([False, False])) is None
    assert widest_gap(np.array([True, True, False, True])) == (0, 1)
    assert widest_gap(np.array([True, False, True])) == (2, 2)  # tie goes to the later (left) run
    assert widest_gap(np.array([False, True, True, True, False, True])) == (1, 3)


def test_cast_rays_against_known_wall():
    p0 = np.array([[2.0, -5.0]])
    p1 = np.array([[2.0, 5.0]])
    r = cast_rays(0.0, 0.0, np.array([0.0, math.pi / 4, math.pi]), p0, p1, 8.0)
    assert r[0] == pytest.approx(2.0)
    assert r[1] == pytest.approx(2.0 * math.sqrt(2.0))
    assert r[2] == 8.0


def test_ftg_steers_into_free_space():
    params = FtgParams()
    n = len(params.angles)
    ranges = np.full(n, 8.0)
    assert reactive_opponent_control(VehicleState(0, 0, 0, 1.0), ranges, params, LIM)[1] == pytest.approx(0.0, abs=1e-9)
    ranges[params.angles < np.radians(30)] = 0.5   # blocked on the right and ahead
    _, steer = reactive_opponent_control(VehicleState(0, 0, 0, 1.0), ranges, params, LIM)
    assert steer > 0
    accel, _ = reactive_opponent_control(VehicleState(0, 0, 0, 3.0), np.full(n, 0.5), params, LIM)
    assert accel < 0


def test_ftg_drives_a_lap_without_touching_walls(oval):
    walls = WallSegments(oval)
    params = FtgParams(v_cap=2.0)
    x, y, psi = oval.ref.to_cartesian(0.0, 0.0)
    state = VehicleState(x, y, psi, 1.0)
    s = 0.0
    for k in range(int(30.0 / 0.01)):
        if k % 2 == 0:
            cmd = reactive_opponent_control(state, scan(state, walls, [], LIM, params), params, LIM)
        state = step_vehicle(state, cmd[0], cmd[1], 0.01, LIM)
        s = oval.ref.to_frenet(state.x, state.y, s)[0]
        assert not outside_walls(state, oval, LIM, s)


def test_observation_noise_statistics(oval_line):
    noise = NoiseParams()
    rng = np.random.default_rng(0)
    x, y, psi = oval_line.ref.to_cartesian(6.0, 0.2)
    opp = VehicleState(x, y, psi, 2.0)
    x, y, psi = oval_line.ref.to_cartesian(4.0, 0.0)
    ego = VehicleState(x, y, psi, 2.0)
    truth = frenet_state(opp, oval_line)
    got = [observe_opponent(opp, ego, oval_line, noise, rng) for _ in range(4000)]
    seen = [o for o in got if o is not None]
    assert len(seen) / len(got) == pytest.approx(1.0 - noise.dropout, abs=0.015)
    d = np.array([o.d for o in seen])
    v = np.array([o.v_s for o in seen])
    assert d.mean() == pytest.approx(truth.d, abs=4 * noise.sigma_d / math.sqrt(len(d)))
    assert d.std() == pytest.approx(noise.sigma_d, rel=0.1)
    assert v.mean() == pytest.approx(truth.v_s, abs=4 * noise.sigma_vs / math.sqrt(len(v)))
    assert v.std() == pytest.approx(noise.sigma_vs, rel=0.1)


def test_out_of_range_is_not_observed(oval_line):
    noise = NoiseParams(dropout=0.0, max_range=1.0)
    x, y, psi = oval_line.ref.to_cartesian(10.0, 0.0)
    opp = VehicleState(x, y, psi, 2.0)
    x, y, psi = oval_line.ref.to_cartesian(4.0, 0.0)
    assert observe_opponent(opp, VehicleState(x, y, psi), oval_line, noise, np.random.default_rng(0)) is None
