"""Forward propagation of ego and opponent to find the region of collision.

Both cars are advanced along the ego racing line's ``s`` coordinate. The
opponent moves at the speed its fitted GP predicts at its current position;
the ego follows its own speed profile. The region starts at the first step
where the longitudinal gap drops below ``delta`` and ends at the first later
step where it exceeds ``delta`` again.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from overtake.lines import RacingLine
from overtake.track import FrenetState, signed_gap


class RoCError(ValueError):
    pass


@dataclass(frozen=True)
class PropagationParams:
    dt: float = 0.02
    horizon: float = 5.0
    delta: float = 0.6
    a_max: float = 4.0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.horizon < self.dt:
            raise ValueError("horizon must cover at least one step")


@dataclass(frozen=True)
class RegionOfCollision:
    c_start: float = 0.0
    c_end: float = 0.0
    t_s: float = 0.0
    t_e: float = 0.0
    valid: bool = False
    open_ended: bool = False
    trace: list = field(default=None, repr=False, compare=False)


def profile_accel(line: RacingLine, s: float, v: float, dt: float, a_max: float) -> float:
    """Acceleration that brings ``v`` onto the line's profile at the next position.

    When ``v`` already matches the profile this is the discrete form of
    ``v * dv/ds``; otherwise it saturates at ``a_max`` towards the profile.
    """
    step = max(v * dt, 1e-3)
    v_next = line.speed_at(s + step)
    a = (v_next * v_next - v * v) / (2.0 * step)
    if a > a_max:
        return a_max
    if a < -a_max:
        return -a_max
    return a


def predict_roc(ego: FrenetState, opp_s0: float, gp, params: PropagationParams, ego_line: RacingLine,
                opp_speed=None, record_trace: bool = False) -> RegionOfCollision:
    """Propagate both cars over the horizon and return the collision region.

    Parameters
    ----------
    ego:
        Ego state on ``ego_line`` (``s`` and ``v_s`` are used).
    opp_s0:
        Opponent position on the same ``s`` axis.
    gp:
        Fitted :class:`~overtake.gp.OpponentTrajectoryGP` (its speed mean is used).
    opp_speed:
        Optional callable ``s -> v`` overriding the GP speed lookup.
    """
    if gp is None and opp_speed is None:
        raise RoCError("opponent model is not fitted")
    v_of = opp_speed if opp_speed is not None else gp.gp_vs.mean_fast
    length = ego_line.lap_length
    dt = params.dt
    delta = params.delta
    s_e, v_e = ego.s, ego.v_s
    s_o = opp_s0
    # unwrapped positions; gap measured on the loop
    started = False
    c_start = t_s = 0.0
    trace = [] if record_trace else None
    n_steps = int(round(params.horizon / dt))
    t = 0.0
    for _ in range(n_steps):
        v_o = v_of(s_o)
        a_e = profile_accel(ego_line, s_e, v_e, dt, params.a_max)
        s_e = s_e + v_e * dt + 0.5 * a_e * dt * dt
        s_o = s_o + v_o * dt
        v_e = max(v_e + a_e * dt, 0.0)
        t += dt
        if not (math.isfinite(s_e) and math.isfinite(s_o)):
            raise RoCError("non-finite state during propagation")
        gap = signed_gap(s_e, s_o, length)
        if record_trace:
            trace.append((t, s_e % length, s_o % length, gap))
        if abs(gap) < delta and not started:
            started = True
            c_start, t_s = s_e % length, t
        elif abs(gap) > delta and started:
            return RegionOfCollision(c_start, s_e % length, t_s, t, True, False, trace)
    if started:
        return RegionOfCollision(c_start, s_e % length, t_s, t, True, True, trace)
    return RegionOfCollision(trace=trace)


def roc_window(roc: RegionOfCollision, pad: float, lap_length: float) -> tuple[float, float]:
    """Padded ``(s_lo, s_hi)`` around the region, wrapped into [0, lap_length)."""
    if not roc.valid:
        raise RoCError("region of collision is not valid")
    return (roc.c_start - pad) % lap_length, (roc.c_end + pad) % lap_length


def write_trace(roc: RegionOfCollision, path: str | Path, header_comment: str = "") -> None:
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow(["t", "s_ego", "s_opp", "gap"])
        for row in roc.trace or []:
            w.writerow([f"{v:.6f}" for v in row])
