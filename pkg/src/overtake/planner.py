"""Evasion trajectories in the Frenet frame of the ego racing line.

``baseline_spliner`` places a single lateral-shift spline around the
opponent's current position. ``plan_sqp`` optimizes the lateral offsets over
the predicted region of collision by sequential quadratic programming,
warm-started from a spline on the chosen side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
import quadprog

from overtake.collision import RegionOfCollision
from overtake.config import VehicleLimits
from overtake.lines import RacingLine
from overtake.track import FrenetState, forward_distance, signed_gap

LEFT, RIGHT = "left", "right"
ABS_SMOOTHING = 1e-3
FEASIBILITY_TOL = 1e-6
WARM_CUSHION = 0.01  # extra clearance of the warm start, absorbs resampling


@dataclass(frozen=True)
class PlannerWeights:
    """Cost weights, clearance and curvature limits, and grid settings."""

    q_d: float = 1.0
    q_ds: float = 5.0
    q_ddelta: float = 10.0
    delta_min: float = 0.5
    kappa_max: float = 1.0 / VehicleLimits().min_turning_radius
    bound_margin: float = 0.2
    abs_deviation: bool = True
    curvature_exponent: float = 1.5
    ds: float = 0.2
    min_points: int = 12
    max_points: int = 60
    rejoin_length: float = 3.0
    roc_pad: float = 0.25
    spline_pre: float = 2.0
    spline_post: float = 2.5
    spline_step: float = 0.1
    max_iter: int = 50
    tol: float = 1e-6

    def __post_init__(self):
        for name in ("q_d", "q_ds", "q_ddelta", "delta_min", "kappa_max", "bound_margin"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def from_dict(cls, data: dict) -> "PlannerWeights":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown planner keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class EvasionTrajectory:
    """Lateral offsets ``d`` at unwrapped positions ``s`` on the ego racing line."""

    s: np.ndarray
    d: np.ndarray
    side: str
    cost: float
    feasible: bool
    lap_length: float
    d_opp: np.ndarray = field(default=None, repr=False)
    clear_mask: np.ndarray = field(default=None, repr=False)
    d_start: float = 0.0
    info: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.s)

    def offset_at(self, s: float) -> float | None:
        """Offset at loop position ``s``, or None when ``s`` is past the end."""
        rel = forward_distance(self.s[0], s, self.lap_length)
        span = self.s[-1] - self.s[0]
        if rel > span:
            if rel > self.lap_length - 2.0:  # just behind the start
                return float(self.d[0])
            return None
        return float(np.interp(self.s[0] + rel, self.s, self.d))

    def to_csv(self, path, line: RacingLine, header_comment: str = "") -> None:
        x, y = line.ref.to_cartesian_array(self.s, self.d)
        with open(path, "w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("s,d,x,y\n")
            for row in zip(self.s % self.lap_length, self.d, x, y):
                fh.write(",".join(f"{v:.6f}" for v in row) + "\n")


# -- geometry ------------------------------------------------------------------

def frenet_curvature(d, s, exponent: float = 1.5) -> np.ndarray:
    """Curvature of the planar curve ``(s_i, d_i)`` by index finite differences.

    Endpoints copy their neighbours. With ``exponent=1.5`` this is the usual
    parametric curvature; other exponents are kept for comparison only.
    """
    d = np.asarray(d, dtype=float)
    s = np.asarray(s, dtype=float)
    if len(d) < 3 or len(s) != len(d):
        raise ValueError("need at least 3 points with matching s and d")
    steps = np.hypot(np.diff(s), np.diff(d))
    if np.any(steps <= 0.0):
        raise ValueError("duplicate consecutive points")
    s_dot = 0.5 * (s[2:] - s[:-2])
    d_dot = 0.5 * (d[2:] - d[:-2])
    s_dd = s[2:] - 2.0 * s[1:-1] + s[:-2]
    d_dd = d[2:] - 2.0 * d[1:-1] + d[:-2]
    inner = (s_dot * d_dd - d_dot * s_dd) / (s_dot**2 + d_dot**2) ** exponent
    return np.concatenate([inner[:1], inner, inner[-1:]])


def trajectory_cost(d: np.ndarray, h: float, weights: PlannerWeights, d0: float | None = None) -> float:
    """Deviation + squared second derivative + initial-step cost on a uniform grid."""
    d = np.asarray(d, dtype=float)
    dev = np.sum(np.abs(d)) if weights.abs_deviation else np.sum(d)
    dd = (d[2:] - 2.0 * d[1:-1] + d[:-2]) / (h * h)
    d0 = d[0] if d0 is None else d0
    return float(weights.q_d * dev + weights.q_ds * np.sum(dd**2) + weights.q_ddelta * (d[1] - d0) ** 2)


# -- baseline -------------------------------------------------------------------

def _free_width(line: RacingLine, s: float, d_opp: float, margin: float) -> tuple[float, float]:
    dl, dr = line.bounds_at(s)
    return (dl - margin) - d_opp, d_opp + (dr - margin)


def choose_side(line: RacingLine, s: float, d_opp: float, weights: PlannerWeights) -> tuple[str, bool]:
    """Side with more free width at ``s``; ties go left. Also reports feasibility."""
    free_l, free_r = _free_width(line, s, d_opp, weights.bound_margin)
    ok_l = free_l >= weights.delta_min
    ok_r = free_r >= weights.delta_min
    side = LEFT if free_l >= free_r else RIGHT
    if side == LEFT and not ok_l and ok_r:
        side = RIGHT
    elif side == RIGHT and not ok_r and ok_l:
        side = LEFT
    return side, ok_l or ok_r


def baseline_spliner(ego: FrenetState, opp: FrenetState, line: RacingLine, weights: PlannerWeights,
                     side: str | None = None) -> EvasionTrajectory:
    """Lateral-shift spline through ``(s_opp - pre, d_ego)``, ``(s_opp, apex)``, ``(s_opp + post, 0)``."""
    length = line.lap_length
    s_opp = ego.s + forward_distance(ego.s, opp.s, length)
    if signed_gap(ego.s, opp.s, length) < 0.0:
        s_opp -= length
    if side is None:
        side, feasible = choose_side(line, opp.s, opp.d, weights)
    else:
        free_l, free_r = _free_width(line, opp.s, opp.d, weights.bound_margin)
        feasible = (free_l if side == LEFT else free_r) >= weights.delta_min
    apex = opp.d + weights.delta_min if side == LEFT else opp.d - weights.delta_min
    knots_s = [s_opp - weights.spline_pre, s_opp, s_opp + weights.spline_post]
    spline = CubicSpline(knots_s, [ego.d, apex, 0.0], bc_type="clamped")
    n = int(round((weights.spline_pre + weights.spline_post) / weights.spline_step)) + 1
    s = np.linspace(knots_s[0], knots_s[-1], n)
    dl, dr = line.bounds_array(s)
    hi, lo = dl - weights.bound_margin, -(dr - weights.bound_margin)
    d = np.clip(spline(s), lo, hi)
    d[-1] = 0.0
    d_opp = np.full(n, opp.d)
    mask = np.abs(s - s_opp) <= weights.roc_pad
    traj = EvasionTrajectory(s, d, side, 0.0, feasible, length, d_opp, mask, d_start=ego.d)
    traj.cost = trajectory_cost(d, s[1] - s[0], weights)
    return traj


def guard_trajectory(prev: EvasionTrajectory | None, s0: float, d_floor: float, side: str, hold: float,
                     ramp: float, line: RacingLine, margin: float = 0.2, step: float = 0.1) -> EvasionTrajectory:
    """Previous offsets kept at least ``d_floor`` away on ``side`` for ``hold`` meters.

    The floor fades out with a smoothstep over the following ``ramp``
    meters, and the result is clipped to the track bounds shrunk by
    ``margin``. Without a previous trajectory the racing line is used.
    """
    n = max(int(round((hold + ramp) / step)), 2) + 1
    s = s0 + np.linspace(0.0, hold + ramp, n)
    base = np.zeros(n)
    if prev is not None:
        for i, si in enumerate(s):
            v = prev.offset_at(si % line.lap_length)
            base[i] = 0.0 if v is None else v
    u = np.clip((s - s0 - hold) / max(ramp, 1e-9), 0.0, 1.0)
    floor = d_floor * (1.0 - u * u * (3.0 - 2.0 * u))
    d = np.maximum(base, floor) if side == LEFT else np.minimum(base, floor)
    dl, dr = line.bounds_array(s)
    d = np.clip(d, -(dr - margin), dl - margin)
    d[-1] = 0.0
    return EvasionTrajectory(s, d, side, 0.0, True, line.lap_length, d_start=float(d[0]), info={"guard": True})


# -- SQP -----------------------------------------------------------------------------

@dataclass
class _Problem:
    s: np.ndarray          # unwrapped grid
    h: float
    d0: float
    d_opp: np.ndarray
    mask: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    kappa_g: np.ndarray
    side: str
    weights: PlannerWeights
    slope0: float = 0.0    # current dd/ds of the ego, pins the curvature at d0


def _grid(ego: FrenetState, roc: RegionOfCollision, gp, line: RacingLine, weights: PlannerWeights, side: str) -> _Problem:
    length = line.lap_length
    a = forward_distance(ego.s, roc.c_start, length)
    b = forward_distance(ego.s, roc.c_end, length)
    if a > 0.5 * length:  # region already started behind the ego
        a = a - length
    if b < a:
        b += length
    total = max(b, 0.0) + weights.rejoin_length
    n = int(math.ceil(total / weights.ds)) + 1
    n = min(max(n, weights.min_points), weights.max_points)
    s = ego.s + np.linspace(0.0, total, n)
    h = total / (n - 1)
    rel = s - ego.s
    mask = (rel >= a - weights.roc_pad) & (rel <= b + weights.roc_pad)
    mask[0] = False  # the current offset is given, not planned
    d_opp = np.array([gp.gp_d.mean_fast(v) for v in s]) if gp is not None else np.zeros(n)
    dl, dr = line.bounds_array(s)
    slope0 = ego.v_d / ego.v_s if ego.v_s > 0.1 else 0.0
    return _Problem(s, h, ego.d, d_opp, mask, -(dr - weights.bound_margin), dl - weights.bound_margin,
                    line.kappa_array(s), side, weights, float(np.clip(slope0, -1.0, 1.0)))


def _expand(x: np.ndarray, p: _Problem) -> np.ndarray:
    return np.concatenate([[p.d0], x, [0.0, 0.0]])


def _kappa_and_grad(d: np.ndarray, h: float, exponent: float):
    """Curvature at interior points of a uniform grid and its partials w.r.t. (d[i-1], d[i], d[i+1])."""
    d_dot = 0.5 * (d[2:] - d[:-2])
    d_dd = d[2:] - 2.0 * d[1:-1] + d[:-2]
    q = h * h + d_dot * d_dot
    kappa = h * d_dd / q**exponent
    dk_ddd = h / q**exponent
    dk_ddot = -exponent * h * d_dd * 2.0 * d_dot / q ** (exponent + 1.0)
    g_prev = dk_ddd - 0.5 * dk_ddot
    g_mid = -2.0 * dk_ddd
    g_next = dk_ddd + 0.5 * dk_ddot
    return kappa, g_prev, g_mid, g_next


@dataclass
class SQPResult:
    x: np.ndarray
    success: bool
    nit: int
    message: str
    status: int = 0


def _violation(c: np.ndarray) -> float:
    return float(np.sum(np.maximum(-c, 0.0)))


def _qp_step(H, g, J, c, lower, upper, rho):
    """Trust-region QP: min g'p + p'Hp/2 s.t. c + Jp >= 0, lower <= p <= upper.

    Falls back to an elastic formulation (penalized slacks) when the
    linearized constraints are inconsistent. Returns the step, constraint
    multipliers and whether the elastic fallback was used.
    """
    m = len(g)
    eye = np.eye(m)
    C = np.vstack([J, eye, -eye]).T
    b = np.concatenate([-c, lower, -upper])
    try:
        sol = quadprog.solve_qp(H, -g, C, b, 0)
        return sol[0], sol[4][: len(c)], False
    except ValueError:
        pass
    k = len(c)
    G = np.zeros((m + k, m + k))
    G[:m, :m] = H
    G[m:, m:] = 1e-8 * np.eye(k)
    a = -np.concatenate([g, np.full(k, rho)])
    C = np.zeros((m + k, k + k + 2 * m))
    C[:m, :k] = J.T
    C[m:, :k] = np.eye(k)
    C[m:, k : 2 * k] = np.eye(k)
    C[:m, 2 * k : 2 * k + m] = eye
    C[:m, 2 * k + m :] = -eye
    b = np.concatenate([-c, np.zeros(k), lower, -upper])
    sol = quadprog.solve_qp(G, a, C, b, 0)
    return sol[0][:m], sol[4][:k], True


def _solve(p: _Problem, x0: np.ndarray) -> tuple[np.ndarray, SQPResult]:
    """Sequential quadratic programming with an infinity-norm trust region.

    Each iteration solves a QP built from the exact Hessian of the cost
    (quadratic terms plus the smoothed absolute value) and the linearized
    clearance and curvature constraints; steps are accepted on an l1 merit
    function.
    """
    w = p.weights
    n = len(p.s)
    m = n - 3
    h = p.h
    eps = ABS_SMOOTHING
    sign = 1.0 if p.side == LEFT else -1.0
    D2 = (np.eye(n, k=0)[1:-1] * -2.0 + np.eye(n, k=-1)[1:-1] + np.eye(n, k=1)[1:-1]) / (h * h)
    D2_free = D2[:, 1 : n - 2]
    D2_fixed = D2[:, 0] * p.d0
    H_quad = 2.0 * w.q_ds * (D2_free.T @ D2_free)
    H_quad[0, 0] += 2.0 * w.q_ddelta
    lo, hi = p.lo[1 : n - 2], p.hi[1 : n - 2]
    idx = np.flatnonzero(p.mask[1 : n - 2])
    d_opp = p.d_opp[1 : n - 2][idx]
    kg = p.kappa_g[:-1]
    ghost = p.d0 - h * p.slope0
    jac_clear = np.zeros((len(idx), m))
    jac_clear[np.arange(len(idx)), idx] = sign
    rows = np.arange(n - 1)

    def cost(x):
        r = D2_free @ x + D2_fixed
        step = x[0] - p.d0
        if w.abs_deviation:
            dev = np.sum(np.sqrt(x * x + eps * eps) - eps) + abs(p.d0)
        else:
            dev = np.sum(x) + p.d0
        return w.q_d * dev + w.q_ds * float(r @ r) + w.q_ddelta * step * step

    def grad_hess(x):
        r = D2_free @ x + D2_fixed
        if w.abs_deviation:
            root = np.sqrt(x * x + eps * eps)
            g_dev, h_dev = x / root, eps * eps / root**3
        else:
            g_dev, h_dev = np.ones(m), np.zeros(m)
        g = w.q_d * g_dev + 2.0 * w.q_ds * (D2_free.T @ r)
        g[0] += 2.0 * w.q_ddelta * (x[0] - p.d0)
        H = H_quad + np.diag(w.q_d * h_dev + 1e-9)
        return g, H

    def constraints(x, with_jac=True):
        d = np.concatenate([[ghost], _expand(x, p)])
        k, g_prev, g_mid, g_next = _kappa_and_grad(d, h, w.curvature_exponent)
        total = k + kg
        c = np.concatenate([w.kappa_max - total, w.kappa_max + total, sign * (x[idx] - d_opp) - w.delta_min])
        if not with_jac:
            return c
        Jk = np.zeros((n - 1, n + 1))
        Jk[rows, rows] = g_prev
        Jk[rows, rows + 1] = g_mid
        Jk[rows, rows + 2] = g_next
        Jk = Jk[:, 2 : n - 1]
        return c, np.vstack([-Jk, Jk, jac_clear])

    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    radius = 1.0
    rho = 10.0
    f = cost(x)
    c, J = constraints(x)
    message, success, it = "iteration limit reached", False, 0
    for it in range(1, w.max_iter + 1):
        g, H = grad_hess(x)
        lower = np.maximum(lo - x, -radius)
        upper = np.minimum(hi - x, radius)
        try:
            step, lam, elastic = _qp_step(H, g, J, c, lower, upper, rho)
        except ValueError:
            message = "QP subproblem failed"
            break
        if len(lam):
            rho = max(rho, 1.5 * float(np.max(np.abs(lam))) + 1.0)
        viol = _violation(c)
        model = float(g @ step + 0.5 * step @ H @ step)
        pred = -model + rho * (viol - _violation(c + J @ step))
        step_norm = float(np.max(np.abs(step))) if m else 0.0
        if viol <= 1e-9 and (pred <= w.tol * (1.0 + abs(f)) or step_norm < 1e-10):
            message, success = "converged", True
            break
        x_new = x + step
        f_new = cost(x_new)
        c_new = constraints(x_new, with_jac=False)
        ared = (f + rho * viol) - (f_new + rho * _violation(c_new))
        if pred > 0.0 and ared >= 0.1 * pred:
            x, f = x_new, f_new
            c, J = constraints(x)
            if ared >= 0.75 * pred and step_norm >= 0.9 * radius:
                radius = min(2.0 * radius, 4.0)
        else:
            radius = 0.25 * max(step_norm, 1e-12)
            if radius < 1e-10:
                message = "trust region collapsed"
                break
    else:
        it = w.max_iter
    success = success and _violation(constraints(x, with_jac=False)) <= 1e-9
    return x, SQPResult(x, success, it, message)


def validate(traj: EvasionTrajectory, gp, line: RacingLine, weights: PlannerWeights) -> dict:
    """Maximum violation of the clearance, curvature, boundary and terminal constraints.

    Every entry is ``>= 0``; ``0`` means satisfied. ``gp=None`` checks clearance
    against the opponent offsets stored with the trajectory.
    """
    s, d = traj.s, traj.d
    if gp is not None:
        d_opp = np.array([gp.gp_d.mean_fast(v) for v in s])
    else:
        d_opp = traj.d_opp if traj.d_opp is not None else np.zeros(len(s))
    mask = traj.clear_mask if traj.clear_mask is not None else np.zeros(len(s), bool)
    sep = np.abs(d - d_opp)[mask]
    clearance = float(np.max(weights.delta_min - sep, initial=0.0))
    kappa = frenet_curvature(d, s, weights.curvature_exponent)[1:-1] + line.kappa_array(s)[1:-1]
    curvature = float(np.max(np.abs(kappa) - weights.kappa_max, initial=0.0))
    dl, dr = line.bounds_array(s)
    hi, lo = dl - weights.bound_margin, -(dr - weights.bound_margin)
    boundary = float(max(np.max(d - hi, initial=0.0), np.max(lo - d, initial=0.0), 0.0))
    terminal = float(np.max(np.abs(d[-2:])))
    initial = float(abs(d[0] - traj.d_start))
    return {"clearance": max(clearance, 0.0), "curvature": max(curvature, 0.0), "boundary": boundary,
            "terminal": terminal, "initial": initial}


def max_violation(report: dict) -> float:
    return max(report.values())


def _side_admissible(p: _Problem) -> bool:
    """Whether the linear clearance constraints fit inside the bounds on ``p.side``."""
    w = p.weights
    if p.side == LEFT:
        need = p.d_opp[p.mask] + w.delta_min
        return bool(np.all(need <= p.hi[p.mask]))
    need = p.d_opp[p.mask] - w.delta_min
    return bool(np.all(need >= p.lo[p.mask]))


def _smoothstep(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def roc_warm_start(ego: FrenetState, roc: RegionOfCollision, gp, line: RacingLine,
                   weights: PlannerWeights, side: str | None = None) -> EvasionTrajectory:
    """Lateral shift that holds the clearance offset over the whole region.

    The offset ramps from the ego's current ``d`` to ``delta_min`` beyond the
    predicted opponent offset (its extreme over the padded region), stays
    there until the region ends and ramps back to the racing line over
    ``spline_post``. Ramps are smoothsteps, so slopes are zero at the joins.
    """
    length = line.lap_length
    a = forward_distance(ego.s, roc.c_start, length)
    b = forward_distance(ego.s, roc.c_end, length)
    if a > 0.5 * length:
        a -= length
    if b < a:
        b += length
    # one extra step on each side so grid points near the region edges are covered
    s_a = ego.s + max(a - weights.roc_pad - weights.spline_step, 0.0)
    s_b = ego.s + max(b + weights.roc_pad + weights.spline_step, 0.0)
    if side is None:
        s_mid = 0.5 * (s_a + s_b)
        d_mid = gp.gp_d.mean_fast(s_mid) if gp is not None else 0.0
        side, _ = choose_side(line, s_mid % length, d_mid, weights)
    s0 = max(ego.s, s_a - weights.spline_pre)
    s3 = s_b + weights.spline_post
    n = max(int(round((s3 - s0) / weights.spline_step)), 2) + 1
    s = np.linspace(s0, s3, n)
    d_opp = np.array([gp.gp_d.mean_fast(v) for v in s]) if gp is not None else np.zeros(n)
    mask = (s >= s_a) & (s <= s_b)
    in_region = d_opp[mask] if mask.any() else d_opp[:1]
    clear = weights.delta_min + WARM_CUSHION
    apex = float(np.max(in_region)) + clear if side == LEFT else float(np.min(in_region)) - clear
    up = _smoothstep((s - s0) / (s_a - s0)) if s_a > s0 else np.ones(n)
    down = 1.0 - _smoothstep((s - s_b) / weights.spline_post)
    d = np.where(s < s_a, ego.d + (apex - ego.d) * up, apex * down)
    dl, dr = line.bounds_array(s)
    hi, lo = dl - weights.bound_margin, -(dr - weights.bound_margin)
    feasible = bool(np.all((apex <= hi[mask]) & (apex >= lo[mask])))
    d = np.clip(d, lo, hi)
    d[-1] = 0.0
    traj = EvasionTrajectory(s, d, side, 0.0, feasible, length, d_opp, mask, d_start=ego.d)
    traj.cost = trajectory_cost(d, weights.spline_step, weights)
    return traj


def _on_grid(traj: EvasionTrajectory, p: _Problem) -> np.ndarray:
    length = traj.lap_length
    start = p.s[0]
    rel = np.array([signed_gap(start, v % length, length) for v in traj.s])
    order = np.argsort(rel)
    d = np.interp(p.s - start, rel[order], traj.d[order], left=traj.d[order][0], right=0.0)
    d[0] = p.d0
    d[-2:] = 0.0
    return d


def plan_sqp(ego: FrenetState, roc: RegionOfCollision, gp, line: RacingLine, weights: PlannerWeights,
             warm_start: EvasionTrajectory | None = None) -> EvasionTrajectory:
    """Optimize lateral offsets over the region of collision.

    The side is taken from ``warm_start`` (or from a spline placed at the
    region when no warm start is given). On solver failure the warm start,
    resampled on the planning grid, is returned with ``feasible=False``.
    """
    if not roc.valid:
        raise ValueError("empty region of collision")
    if warm_start is None:
        warm_start = roc_warm_start(ego, roc, gp, line, weights)
        p = _grid(ego, roc, gp, line, weights, warm_start.side)
        if not _side_admissible(p):
            other = RIGHT if p.side == LEFT else LEFT
            q = _grid(ego, roc, gp, line, weights, other)
            if _side_admissible(q):
                warm_start = roc_warm_start(ego, roc, gp, line, weights, side=other)
                p = q
    else:
        p = _grid(ego, roc, gp, line, weights, warm_start.side)
    d_warm = _on_grid(warm_start, p)
    if _side_admissible(p):
        x, res = _solve(p, d_warm[1:-2])
    else:
        x, res = d_warm[1:-2], SQPResult(d_warm[1:-2], False, 0, "clearance conflicts with track bounds")
    d = _expand(x, p)
    h = p.h

    def make(dv, feasible_hint, info):
        t = EvasionTrajectory(p.s.copy(), dv, p.side, trajectory_cost(dv, h, weights), feasible_hint,
                              line.lap_length, p.d_opp, p.mask, d_start=p.d0, info=info)
        rep = validate(t, None, line, weights)
        t.feasible = feasible_hint and max_violation(rep) <= FEASIBILITY_TOL
        t.info["violation"] = rep
        return t

    sol = make(d, res.success, {"iterations": res.nit, "message": res.message})
    warm = make(d_warm, True, {"warm_start": True})
    if warm.feasible and (not sol.feasible or warm.cost < sol.cost):
        warm.info["warm_start_kept"] = True
        return warm
    if not sol.feasible:
        warm.feasible = False
        warm.info.update(sol.info)
        return warm
    return sol
