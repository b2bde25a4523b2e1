import dataclasses
import math

import numpy as np
import pytest

from helpers import brute_roc, roc_scenarios
from overtake.collision import PropagationParams, RoCError, predict_roc, roc_window
from overtake.track import FrenetState, signed_gap

PARAMS = PropagationParams()


def coarse_step(line, params=PARAMS):
    return float(np.max(line.v)) * params.dt


def test_matches_fine_step_oracle():
    checked = 0
    for line, s_e, v_e, s_o, v_of in roc_scenarios():
        roc = predict_roc(FrenetState(s_e, 0.0, v_e), s_o, None, PARAMS, line, opp_speed=v_of)
        ref = brute_roc(line, s_e, v_e, s_o, v_of, PARAMS)
        L = line.lap_length
        if ref is None:
            assert not roc.valid
            continue
        assert roc.valid
        tol = coarse_step(line) + 1e-9
        assert abs(signed_gap(ref[0], roc.c_start, L)) <= tol
        assert abs(signed_gap(ref[1], roc.c_end, L)) <= tol
        checked += 1
    assert checked >= 40


def constant_line(line, v):
    return dataclasses.replace(line, v=np.full_like(line.v, v))


@pytest.mark.parametrize("v_e,v_o,gap", [(3.0, 1.5, 2.0), (4.0, 1.0, 1.2), (2.5, 1.5, 3.0)])
def test_constant_speed_intercept(oval_line, v_e, v_o, gap):
    line = constant_line(oval_line, v_e)
    L = line.lap_length
    s0 = 10.0
    roc = predict_roc(FrenetState(s0, 0.0, v_e), s0 + gap, None, PARAMS, line, opp_speed=lambda s: v_o)
    closing = v_e - v_o
    t_s = (gap - PARAMS.delta) / closing
    t_e = (gap + PARAMS.delta) / closing
    step = v_e * PARAMS.dt
    assert roc.valid and not roc.open_ended
    assert abs(signed_gap(s0 + v_e * t_s, roc.c_start, L)) <= step
    assert abs(signed_gap(s0 + v_e * t_e, roc.c_end, L)) <= step
    assert abs(roc.t_s - t_s) <= PARAMS.dt and abs(roc.t_e - t_e) <= PARAMS.dt


def test_error_shrinks_with_step(oval_line):
    line = constant_line(oval_line, 3.0)
    exact = 10.0 + 3.0 * (2.0 - PARAMS.delta) / 1.5
    errs = []
    for dt in (0.04, 0.02, 0.01, 0.005):
        roc = predict_roc(FrenetState(10.0, 0.0, 3.0), 12.0, None, dataclasses.replace(PARAMS, dt=dt), line,
                          opp_speed=lambda s: 1.5)
        errs.append(abs(roc.c_start - exact))
    assert errs[-1] <= errs[0]
    assert errs[-1] <= 3.0 * 0.005


def test_slower_ego_gives_no_region(oval_line):
    line = constant_line(oval_line, 1.0)
    roc = predict_roc(FrenetState(0.0, 0.0, 1.0), 2.0, None, PARAMS, line, opp_speed=lambda s: 2.0)
    assert not roc.valid


def test_open_ended_when_horizon_too_short(oval_line):
    line = constant_line(oval_line, 2.0)
    roc = predict_roc(FrenetState(0.0, 0.0, 2.0), 1.0, None, PARAMS, line, opp_speed=lambda s: 1.9)
    assert roc.valid and roc.open_ended


def test_requires_model(oval_line):
    with pytest.raises(RoCError):
        predict_roc(FrenetState(0.0, 0.0, 2.0), 1.0, None, PARAMS, oval_line)
    with pytest.raises(RoCError):
        roc_window(predict_roc(FrenetState(0.0, 0.0, 1.0), 9.0, None, PARAMS, oval_line,
                               opp_speed=lambda s: 5.0), 0.2, oval_line.lap_length)


def test_trace_is_recorded(oval_line):
    roc = predict_roc(FrenetState(0.0, 0.0, 2.0), 2.0, None, PARAMS, oval_line, opp_speed=lambda s: 1.0,
                      record_trace=True)
    assert len(roc.trace) > 0
    t = [row[0] for row in roc.trace]
    assert np.all(np.diff(t) > 0) and math.isclose(t[0], PARAMS.dt)
