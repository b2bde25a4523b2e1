"""Shared builders for the test suite."""

import math
import warnings

import numpy as np

from overtake.collision import RegionOfCollision
from overtake.config import VehicleLimits
from overtake.gp import OpponentObservation, OpponentTrajectoryGP, bin_observations, fit, fit_periodic_gp
from overtake.planner import (
    LEFT,
    RIGHT,
    EvasionTrajectory,
    PlannerWeights,
    _expand,
    _grid,
    _on_grid,
    _Problem,
    _solve,
    roc_warm_start,
    trajectory_cost,
)
from overtake.sim.race import TRACK_DIR, _track, cached_line
from overtake.track import FrenetState, signed_gap

TRACKS = ("oval_chicane", "kidney")
MARGIN = 0.25


def track_path(name: str) -> str:
    return str(TRACK_DIR / f"{name}.txt")


def load(name: str):
    return _track(track_path(name))


def ego_line(name: str, kind: str = "min_curvature"):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return cached_line(track_path(name), kind, MARGIN, VehicleLimits())


def synthetic_gp(lap_length: float, d_fn, v_fn, n_laps: int = 3, step: float = 0.05, seed: int = 0):
    """GP fitted through the binning pipeline from noiseless samples of ``d_fn`` and ``v_fn``."""
    rng = np.random.default_rng(seed)
    obs = []
    for _ in range(n_laps):
        s = np.arange(0.0, lap_length, step) + rng.uniform(0.0, step)
        obs += [OpponentObservation(float(v % lap_length), float(d_fn(v)), float(v_fn(v))) for v in s]
    return fit(bin_observations(obs, lap_length=lap_length))


def direct_gp(lap_length: float, d_fn, v_fn, spacing: float = 0.5):
    """GP fitted straight on noiseless samples, skipping the binning step (faster)."""
    x = np.arange(0.0, lap_length, spacing)
    gp_d = fit_periodic_gp(x, np.array([d_fn(v) for v in x]), "matern52", lap_length)
    gp_vs = fit_periodic_gp(x, np.array([v_fn(v) for v in x]), "rbf", lap_length)
    return OpponentTrajectoryGP(gp_d, gp_vs, lap_length)


def circle_points(radius: float, n: int = 200) -> np.ndarray:
    t = np.linspace(0.0, 2.0 * math.pi, n + 1)
    return np.column_stack([radius * np.cos(t), radius * np.sin(t)])


# -- planner scenarios ---------------------------------------------------------

def planner_scenarios(n: int = 100, seed: int = 3):
    """Random ego states, opponent offset profiles and collision regions on both shipped tracks.

    Yields ``(line, ego, roc, gp)``.
    """
    rng = np.random.default_rng(seed)
    for k in range(n):
        line = ego_line(TRACKS[k % 2])
        L = line.lap_length
        amp, phase, base = rng.uniform(0.0, 0.3), rng.uniform(0.0, 2 * math.pi), rng.uniform(-0.3, 0.3)
        gp = direct_gp(L, lambda s, a=amp, p=phase, b=base: b + a * math.sin(6 * math.pi * s / L + p),
                       lambda s: 2.0)
        s0 = rng.uniform(0.0, L)
        dl, dr = line.bounds_at(s0)
        ego = FrenetState(s0, rng.uniform(-0.5, 0.5) * min(dl, dr), line.speed_at(s0), rng.uniform(-0.2, 0.2))
        start = rng.uniform(0.8, 3.0)
        span = rng.uniform(0.3, 2.0)
        roc = RegionOfCollision((s0 + start) % L, (s0 + start + span) % L, 0.5, 1.0, True)
        yield line, ego, roc, gp


def dp_minimum(d0: float, levels: np.ndarray, h: float, d_opp: np.ndarray, mask: np.ndarray, sign: float,
               lo: np.ndarray, hi: np.ndarray, weights) -> tuple[float, np.ndarray]:
    """Exact minimum of the discretized cost over offsets restricted to ``levels``.

    Index 0 is fixed to ``d0`` and the last two points to zero. The state is
    the pair of the two most recent offsets, so the curvature limit at each
    interior point and the squared second difference are evaluated exactly.
    The initial heading is taken as zero (ghost point equal to ``d0``).
    """
    n = len(mask)
    m = len(levels)
    inf = math.inf
    p = weights.curvature_exponent
    qd, qs, qdl = weights.q_d, weights.q_ds, weights.q_ddelta

    def allowed(i):
        ok = (levels >= lo[i] - 1e-12) & (levels <= hi[i] + 1e-12)
        if mask[i]:
            ok &= sign * (levels - d_opp[i]) >= weights.delta_min - 1e-12
        if i >= n - 2:
            ok &= np.abs(levels) < 1e-12
        return ok

    def curv_ok(a, b, c):
        dd = a - 2.0 * b + c
        dot = 0.5 * (c - a)
        kappa = h * dd / (h * h + dot * dot) ** p
        return np.abs(kappa) <= weights.kappa_max + 1e-12

    def smooth(a, b, c):
        return qs * ((a - 2.0 * b + c) / (h * h)) ** 2

    A, B, C = np.meshgrid(levels, levels, levels, indexing="ij")  # d[i-1], d[i], d[i+1]
    trans_cost = smooth(A, B, C)
    trans_ok = curv_ok(A, B, C)

    # curvature at index 0 uses the ghost point; the cost has no term there
    ok1 = allowed(1) & curv_ok(d0, d0, levels)
    row = np.where(ok1, qd * np.abs(levels) + qdl * (levels - d0) ** 2, inf)
    # d0 is not a level, so the first pair state is (d1, d2)
    ok2 = allowed(2)
    c2 = (qd * np.abs(levels)[None, :] + smooth(d0, levels[:, None], levels[None, :]))
    okc = curv_ok(d0, levels[:, None], levels[None, :]) & ok2[None, :] & ok1[:, None]
    cost = np.where(okc, row[:, None] + c2, inf)          # (d1, d2)
    back = [None, None, None]  # indexed by i
    for i in range(3, n):
        oki = allowed(i)
        total = cost[:, :, None] + trans_cost + (qd * np.abs(levels))[None, None, :]
        total = np.where(trans_ok & oki[None, None, :], total, inf)
        arg = np.argmin(total, axis=0)                     # best d[i-2] per (d[i-1], d[i])
        cost = np.take_along_axis(total, arg[None], axis=0)[0]
        back.append(arg)
    j = int(np.argmin(cost))
    a, b = divmod(j, m)
    best = float(cost[a, b]) + qd * abs(d0)
    if not math.isfinite(best):
        return inf, None
    idx = [a, b]
    for i in range(n - 1, 2, -1):
        idx.insert(0, int(back[i][idx[0], idx[1]]))
    d = np.concatenate([[d0], levels[idx]])
    return best, d


# -- oracles shared with the acceptance suite ------------------------------------

def brute_roc(line, s_e, v_e, s_o, v_of, params, refine=20):
    """Fine-step reference: same dynamics, ``dt / refine``, explicit Euler with per-step profile tracking."""
    dt = params.dt / refine
    L = line.lap_length
    started, c_start = False, None
    for _ in range(int(round(params.horizon / dt))):
        step = max(v_e * dt, 1e-3)
        v_next = line.speed_at(s_e + step)
        a = min(max((v_next**2 - v_e**2) / (2.0 * step), -params.a_max), params.a_max)
        v_o = v_of(s_o)
        s_e, s_o = s_e + v_e * dt + 0.5 * a * dt * dt, s_o + v_o * dt
        v_e = max(v_e + a * dt, 0.0)
        gap = signed_gap(s_e, s_o, L)
        if abs(gap) < params.delta and not started:
            started, c_start = True, s_e
        elif abs(gap) > params.delta and started:
            return c_start % L, s_e % L
    return (c_start % L, s_e % L) if started else None


def roc_scenarios(n: int = 50, seed: int = 11):
    """Alternating tracks; even cases use a constant opponent speed, odd ones a scaled line profile."""
    rng = np.random.default_rng(seed)
    for k in range(n):
        line = ego_line("oval_chicane" if k % 2 else "kidney")
        L = line.lap_length
        s_e = rng.uniform(0.0, L)
        v_e = line.speed_at(s_e) * rng.uniform(0.7, 1.0)
        gap = rng.uniform(0.8, 4.0)
        frac = rng.uniform(0.3, 0.7)
        if k % 2:
            v_of = lambda s, f=frac, ln=line: f * ln.speed_at(s)  # noqa: E731
        else:
            v_const = frac * float(np.mean(line.v))
            v_of = lambda s, v=v_const: v  # noqa: E731
        yield line, s_e, v_e, (s_e + gap) % L, v_of


def warm_start_on_grid(ego, roc, gp, line, traj, weights=None):
    """The warm start that ``plan_sqp`` used, resampled on its grid, as a trajectory."""
    W = weights or PlannerWeights()
    p = _grid(ego, roc, gp, line, W, traj.side)
    d = _on_grid(roc_warm_start(ego, roc, gp, line, W, side=traj.side), p)
    return EvasionTrajectory(p.s, d, p.side, trajectory_cost(d, p.h, W), True, line.lap_length, p.d_opp, p.mask,
                             d_start=p.d0)


def dp_instance(rng, n: int = 20, h: float = 0.5):
    """Straight-line problem with one clearance window and 21 offset levels in [-1, 1]."""
    W = PlannerWeights()
    levels = np.linspace(-1.0, 1.0, 21)
    d0 = float(rng.choice(levels[7:14]))
    d_opp = np.full(n, rng.uniform(-0.3, 0.3))
    a = int(rng.integers(5, 10))
    mask = np.zeros(n, bool)
    mask[a : a + int(rng.integers(2, 5))] = True
    side = LEFT if rng.random() < 0.5 else RIGHT
    lo, hi = np.full(n, -1.0), np.full(n, 1.0)
    p = _Problem(h * np.arange(n), h, d0, d_opp, mask, lo, hi, np.zeros(n), side, W, 0.0)
    return p, levels


def solve_instance(p):
    W = p.weights
    sign = 1.0 if p.side == LEFT else -1.0
    x0 = np.where(p.mask, p.d_opp + sign * (W.delta_min + 0.05), 0.0)[1:-2]
    x, res = _solve(p, x0)
    return _expand(x, p), res
