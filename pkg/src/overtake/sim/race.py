"""Fixed-step race orchestration and the speed-scaler search.

A race runs in two phases. The ego first trails the opponent for at least
one lap, feeding noisy observations into the bins, and fits the opponent GP.
It then repeats overtaking attempts: trail, plan, overtake, rejoin. After
every overtake or crash the ego is respawned a fixed gap behind the
opponent.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from overtake.collision import PropagationParams
from overtake.config import VehicleLimits
from overtake.gp import GPFitError, OpponentObservation, consistency_check, empty_bins, fit
from overtake.lines import RacingLine, centerline_line, min_curvature_line, shortest_path_line
from overtake.planner import LEFT, RIGHT, PlannerWeights, guard_trajectory
from overtake.track import FrenetState, OutOfDomainError, TrackModel, forward_distance, load_track, signed_gap
from overtake.sim.control import FollowPath, PursuitParams, TrackingError, pure_pursuit_control
from overtake.sim.opponent import (
    FtgParams,
    NoiseParams,
    OpponentBehavior,
    WallSegments,
    line_speed_factor,
    observe_opponent,
    frenet_state,
    reactive_opponent_control,
    scan,
)
from overtake.sim.planners import PLANNERS, make_planner
from overtake.sim.vehicle import VehicleState, detect_crash, step_vehicle

TRACK_DIR = Path(__file__).resolve().parent.parent / "tracks"
LEARN, TRAIL, OVERTAKE, REJOIN = "learn", "trail", "overtake", "rejoin"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimParams:
    dt: float = 0.01
    planner_hz: float = 20.0
    scan_hz: float = 50.0
    follow_gap: float = 1.5
    guard_gap: float = 0.8
    guard_lateral: float = 0.15
    acc_gain: float = 1.5
    respawn_gap: float = 3.0
    overtake_hold: float = 1.0
    target_overtakes: int = 5
    attempt_timeout: float = 30.0
    max_learning_laps: int = 4
    detection_range: float = 8.0
    activation_distance: float = 3.0
    estimate_timeout: float = 0.25
    abort_debounce: int = 4
    k_sigma: float = 2.0
    replan_cooldown: float = 0.5
    stop_on_crash: bool = False
    line_margin: float = 0.25
    record_every: int = 10
    pursuit: PursuitParams = PursuitParams()

    def __post_init__(self):
        if not 0.0 < self.dt <= 0.05:
            raise ValueError("dt must be in (0, 0.05]")
        if self.target_overtakes < 1:
            raise ValueError("target_overtakes must be at least 1")


def _build(cls, data: dict | None):
    """Instantiate a (possibly nested) frozen dataclass from a plain dict."""
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{cls.__name__}: expected an object, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{cls.__name__}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = known[name].default
        kwargs[name] = _build(type(default), value) if is_dataclass(default) else value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{cls.__name__}: {exc}") from exc


@dataclass(frozen=True)
class RaceConfig:
    track: str
    behavior: str = "racing_line"
    speed_scaler: float = 0.5
    planner: str = "predictive"
    seed: int = 0
    vehicle: VehicleLimits = VehicleLimits()
    weights: PlannerWeights = PlannerWeights()
    propagation: PropagationParams = PropagationParams()
    noise: NoiseParams = NoiseParams()
    sim: SimParams = SimParams()
    ftg: FtgParams = FtgParams()
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        if self.planner not in PLANNERS:
            raise ConfigError(f"unknown planner {self.planner!r}; expected one of {PLANNERS}")
        try:
            behavior = OpponentBehavior.parse(self.behavior, self.speed_scaler)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        object.__setattr__(self, "behavior", behavior.variant)

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | Path = ".") -> "RaceConfig":
        if "track" not in data:
            raise ConfigError("config needs a 'track' entry")
        cfg = _build(cls, {k: v for k, v in data.items() if k != "base_dir"})
        return replace(cfg, base_dir=str(base_dir))

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("base_dir")
        return out

    def config_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def with_overrides(self, **kwargs) -> "RaceConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        try:
            return replace(self, **kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def read_config_dict(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data


def load_config(path: str | Path) -> RaceConfig:
    return RaceConfig.from_dict(read_config_dict(path), base_dir=Path(path).parent)


def resolve_track(name: str, base_dir: str | Path = ".") -> Path:
    """Find a track file as given, relative to ``base_dir``, or among the shipped tracks."""
    candidates = [Path(name), Path(base_dir) / name, TRACK_DIR / name, TRACK_DIR / f"{name}.txt"]
    for c in candidates:
        if c.is_file():
            return c.resolve()
    raise ConfigError(f"track file not found: {name}")


# -- environment -----------------------------------------------------------------------

@lru_cache(maxsize=8)
def _track(path: str) -> TrackModel:
    return load_track(path)


@lru_cache(maxsize=32)
def cached_line(path: str, kind: str, margin: float, limits: VehicleLimits) -> RacingLine:
    track = _track(path)
    if kind in ("racing_line", "min_curvature"):
        return min_curvature_line(track, margin, limits)
    if kind == "shortest_path":
        return shortest_path_line(track, margin, limits)
    if kind == "centerline":
        return centerline_line(track, limits)
    raise ConfigError(f"no line generator for {kind!r}")


@lru_cache(maxsize=8)
def _walls(path: str) -> WallSegments:
    return WallSegments(_track(path))


@dataclass
class Environment:
    track: TrackModel
    ego_line: RacingLine
    opp_line: RacingLine          # the centerline for the reactive behavior
    opp_scale: float
    walls: WallSegments | None = None
    ftg: FtgParams | None = None


def build_environment(cfg: RaceConfig) -> Environment:
    path = str(resolve_track(cfg.track, cfg.base_dir))
    margin = cfg.sim.line_margin
    track = _track(path)
    ego_line = cached_line(path, "min_curvature", margin, cfg.vehicle)
    if cfg.behavior == "reactive":
        opp_line = cached_line(path, "centerline", margin, cfg.vehicle)
        v_cap = calibrate_ftg(path, cfg.speed_scaler, cfg.vehicle, cfg.ftg, cfg.sim.dt, cfg.sim.scan_hz, margin)
        return Environment(track, ego_line, opp_line, 1.0, _walls(path), replace(cfg.ftg, v_cap=v_cap))
    opp_line = cached_line(path, cfg.behavior, margin, cfg.vehicle)
    scale = line_speed_factor(opp_line.lap_time, ego_line.lap_time, cfg.speed_scaler)
    return Environment(track, ego_line, opp_line, scale)


def _ftg_lap_time(path: str, limits: VehicleLimits, ftg: FtgParams, dt: float, scan_hz: float) -> float:
    track, walls = _track(path), _walls(path)
    ref = track.ref
    x, y, psi = ref.to_cartesian(0.0, 0.0)
    state = VehicleState(x, y, psi, 0.5 * ftg.v_cap)
    every = max(int(round(1.0 / (scan_hz * dt))), 1)
    s_prev, travelled, t, cmd = 0.0, 0.0, 0.0, (0.0, 0.0)
    for k in range(int(120.0 / dt)):
        if k % every == 0:
            cmd = reactive_opponent_control(state, scan(state, walls, [], limits, ftg), ftg, limits)
        state = step_vehicle(state, cmd[0], cmd[1], dt, limits)
        t += dt
        s, _ = ref.to_frenet(state.x, state.y, s_prev)
        travelled += signed_gap(s_prev, s, track.total_length)
        s_prev = s
        if travelled >= 2.0 * track.total_length:
            return t / 2.0
    raise RuntimeError("reactive driver did not complete two laps in calibration")


@lru_cache(maxsize=32)
def calibrate_ftg(path: str, speed_scaler: float, limits: VehicleLimits, ftg: FtgParams, dt: float,
                  scan_hz: float, margin: float) -> float:
    """Speed cap giving the reactive driver a solo lap time of ``T_ego / speed_scaler``."""
    ego_line = cached_line(path, "min_curvature", margin, limits)
    target = ego_line.lap_time / speed_scaler
    v_cap = min(limits.v_max, ego_line.lap_length / target * 1.3)
    for _ in range(3):
        lap = _ftg_lap_time(path, limits, replace(ftg, v_cap=v_cap), dt, scan_hz)
        v_cap = v_cap * lap / target
    return v_cap


# -- outcome ---------------------------------------------------------------------------

@dataclass
class RaceOutcome:
    n_overtakes: int = 0
    n_crashes: int = 0
    n_aborts: int = 0
    terminated: str = ""
    sim_time: float = 0.0
    lap_times: dict = field(default_factory=lambda: {"ego": [], "opponent": []})
    events: list = field(default_factory=list)
    # not part of the deterministic record
    plan_times: list = field(default_factory=list, repr=False)
    observations: list = field(default_factory=list, repr=False)
    gp: object = field(default=None, repr=False)
    trace: list = field(default_factory=list, repr=False)
    maneuvers: list = field(default_factory=list, repr=False)

    @property
    def success_rate(self) -> float:
        total = self.n_overtakes + self.n_crashes
        return self.n_overtakes / total if total else 0.0

    @property
    def success(self) -> bool:
        return self.terminated == "target" and self.n_crashes == 0

    def metrics(self) -> dict:
        return {
            "n_overtakes": self.n_overtakes,
            "n_crashes": self.n_crashes,
            "n_aborts": self.n_aborts,
            "r_otc": self.success_rate,
            "terminated": self.terminated,
            "success": self.success,
            "sim_time": self.sim_time,
            "lap_times": self.lap_times,
        }


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


# -- race loop -----------------------------------------------------------------------------

class _Race:
    """Mutable state of one race; see :func:`run_race`."""

    def __init__(self, cfg: RaceConfig, record: bool):
        self.cfg = cfg
        self.sp = cfg.sim
        self.lim = cfg.vehicle
        self.env = build_environment(cfg)
        self.line = self.env.ego_line
        self.L = self.line.lap_length
        self.record = record
        self.rng = np.random.default_rng(cfg.seed)
        self.planner = make_planner(cfg.planner, cfg.weights, cfg.propagation, self.sp.activation_distance)
        self.out = RaceOutcome()
        self.path = FollowPath(self.line)
        self.opp_path = FollowPath(self.env.opp_line, self.env.opp_scale)
        self.bins = empty_bins(self.L)
        self.gp = None
        self.t = 0.0
        self.mode = LEARN
        self.travelled = 0.0
        self.last_obs: OpponentObservation | None = None
        self.hold = 0.0
        self.inconsistent = 0
        self.cooldown_until = 0.0
        self.attempt_start = 0.0
        self.ftg_cmd = (0.0, 0.0)
        self.lap_start = {"ego": None, "opponent": None}

        opp_ref = self.env.opp_line.ref
        x, y, psi = opp_ref.to_cartesian(0.0, 0.0)
        self.opp = VehicleState(x, y, psi, self.opp_path.speed(0.0))
        self.s_opp_own = 0.0
        self.s_opp, self.d_opp = self.line.ref.to_frenet(x, y)
        self._respawn_ego()

    # -- helpers ---------------------------------------------------------------------

    def event(self, event_type: str, **data) -> None:
        rec = {"t": round(self.t, 6), "type": event_type}
        rec.update({k: _jsonable(v) for k, v in data.items()})
        self.out.events.append(rec)

    def _respawn_ego(self) -> None:
        s = (self.s_opp - self.sp.respawn_gap) % self.L
        x, y, psi = self.line.ref.to_cartesian(s, 0.0)
        v = min(self.line.speed_at(s), self.opp.v)
        self.ego = VehicleState(x, y, psi, v)
        self.s_ego, self.d_ego = s, 0.0
        self.path.set_trajectory(None, self.lim)
        self.planner.reset()
        self.hold = 0.0
        self.inconsistent = 0
        self.last_obs = None
        self.lap_start["ego"] = None
        if self.mode != LEARN:
            self.mode = TRAIL
        self.attempt_start = self.t

    def opponent_estimate(self) -> FrenetState | None:
        obs = self.last_obs
        if obs is None or self.t - obs.timestamp > self.sp.estimate_timeout:
            return None
        s = (obs.s + obs.v_s * (self.t - obs.timestamp)) % self.L
        return FrenetState(s, obs.d, obs.v_s)

    def acc_limit(self) -> float | None:
        """Gap-keeping speed limit behind the estimated opponent.

        While trailing it holds ``follow_gap``. During a maneuver it only
        engages when the cars still overlap laterally, and then holds the
        shorter ``guard_gap`` so the ego does not drive into the opponent
        before it has moved across.
        """
        est = self.opponent_estimate()
        if est is None:
            return None
        gap = signed_gap(self.s_ego, est.s, self.L)
        if gap <= 0.0:
            return None
        if self.mode in (LEARN, TRAIL):
            return est.v_s + self.sp.acc_gain * (gap - self.sp.follow_gap)
        if abs(self.d_ego - est.d) >= self.lim.width + self.sp.guard_lateral:
            return None
        return est.v_s + self.sp.acc_gain * (gap - self.sp.guard_gap)

    # -- per-step pieces ------------------------------------------------------------------

    def control_opponent(self, k: int) -> tuple[float, float]:
        if self.env.ftg is not None:
            every = max(int(round(1.0 / (self.sp.scan_hz * self.sp.dt))), 1)
            if k % every == 0:
                ranges = scan(self.opp, self.env.walls, [self.ego], self.lim, self.env.ftg)
                self.ftg_cmd = reactive_opponent_control(self.opp, ranges, self.env.ftg, self.lim)
            return self.ftg_cmd
        return pure_pursuit_control(self.opp, self.opp_path, self.s_opp_own, self.sp.pursuit, self.lim)

    def observe(self, k: int) -> None:
        rate = self.cfg.noise.rate_hz
        if int(k * self.sp.dt * rate + 1e-9) == int((k - 1) * self.sp.dt * rate + 1e-9):
            return
        obs = observe_opponent(self.opp, self.ego, self.line, self.cfg.noise, self.rng, self.t, self.s_opp)
        if obs is None:
            return
        self.last_obs = obs
        self.bins.add(obs)
        if self.record:
            self.out.observations.append(obs)
        # inside the following gap the maneuver is committed; backing out would steer into the opponent
        committed = signed_gap(self.s_ego, obs.s, self.L) < self.sp.follow_gap
        if self.mode == OVERTAKE and self.gp is not None and not committed:
            if consistency_check(self.gp, obs, self.sp.k_sigma):
                self.inconsistent = 0
            else:
                self.inconsistent += 1
                if self.inconsistent >= self.sp.abort_debounce:
                    self.out.n_aborts += 1
                    self.event("abort", s_ego=self.s_ego, s_opp=self.s_opp)
                    self.mode = TRAIL
                    self.path.set_trajectory(None, self.lim)
                    self.planner.reset()
                    self.inconsistent = 0
                    self.cooldown_until = self.t + self.sp.replan_cooldown

    def try_fit(self) -> bool:
        if self.travelled < self.L or self.bins.coverage < 0.6:
            if self.travelled >= self.sp.max_learning_laps * self.L:
                self.event("gp_fit_failed", coverage=self.bins.coverage)
                self.out.terminated = "gp_fit_failed"
                return False
            return True
        try:
            self.gp = fit(self.bins)
        except GPFitError as exc:
            self.event("gp_fit_failed", reason=str(exc))
            self.out.terminated = "gp_fit_failed"
            return False
        self.out.gp = self.gp
        self.event("gp_fit", coverage=self.bins.coverage, n_bins=int(np.sum(self.bins.count > 0)))
        self.mode = TRAIL
        self.attempt_start = self.t
        return True

    def plan_cycle(self) -> None:
        est = self.opponent_estimate()
        if est is None:
            return
        gap = signed_gap(self.s_ego, est.s, self.L)
        fs = frenet_state(self.ego, self.line, self.s_ego)
        ego_fs = FrenetState(self.s_ego, self.d_ego, max(fs.v_s, 0.0), fs.v_d)
        if self.mode == TRAIL:
            if self.t < self.cooldown_until or not 0.0 < gap <= self.sp.detection_range:
                return
            traj = self.planner.plan(ego_fs, est, self.gp, self.line)
            if traj is None:
                return
            self.path.set_trajectory(traj, self.lim)
            self.mode = OVERTAKE
            roc = self.planner.last_roc
            info = {"c_start": roc.c_start, "c_end": roc.c_end} if roc is not None and self.cfg.planner == "predictive" else {}
            self.event("maneuver", side=traj.side, s_from=float(traj.s[0] % self.L),
                       s_to=float(traj.s[-1] % self.L), s_ego=self.s_ego, s_opp=est.s, **info)
            if self.record:
                self.out.maneuvers.append(traj)
            return
        if gap > -self.cfg.propagation.delta:  # not yet clear of the opponent
            self.mode = OVERTAKE
            traj = self.planner.plan(ego_fs, est, self.gp, self.line)
            if traj is not None:
                self.path.set_trajectory(traj, self.lim)
            elif gap > self.lim.length and self.path.traj is not None:
                # no plan before drawing alongside: drop back and return to the line
                self.back_off()
            elif self.path.traj is not None:
                # no plan while alongside: keep the last path unless it runs into the opponent
                self.guard_path(est, gap)
            elif self.path.finished(self.s_ego):
                self.path.set_trajectory(None, self.lim)
                self.planner.reset()
                self.mode = TRAIL
        else:
            self.mode = REJOIN
            if self.path.traj is not None and self.path.finished(self.s_ego):
                self.path.set_trajectory(None, self.lim)

    def back_off(self) -> None:
        w = self.cfg.weights
        side = LEFT if self.d_ego >= 0.0 else RIGHT
        ramp = max(w.rejoin_length, 4.0 * abs(self.d_ego))
        self.path.set_trajectory(guard_trajectory(None, self.s_ego, self.d_ego, side, 0.0, ramp, self.line,
                                                  w.bound_margin), self.lim)
        self.planner.reset()
        self.mode = TRAIL
        self.event("back_off", s_ego=self.s_ego)

    def guard_path(self, est: FrenetState, gap: float) -> None:
        """Clamp the current path away from the opponent estimate until the ego is clear."""
        w = self.cfg.weights
        side = LEFT if self.d_ego >= est.d else RIGHT
        sep = self.lim.width + self.sp.guard_lateral
        floor = est.d + sep if side == LEFT else est.d - sep
        hold = max(gap, 0.0) + self.cfg.propagation.delta + self.lim.length
        ramp = max(w.rejoin_length, 4.0 * abs(floor))
        guarded = guard_trajectory(self.path.traj, self.s_ego, floor, side, hold, ramp, self.line, w.bound_margin)
        ahead = guarded.s <= self.s_ego + hold
        current = np.array([self.path.offset(si % self.L) for si in guarded.s[ahead]])
        if np.max(np.abs(current - guarded.d[ahead])) > 1e-9:
            self.path.set_trajectory(guarded, self.lim)

    def laps(self, who: str, s_old: float, s_new: float, length: float) -> None:
        if s_new < s_old - 0.5 * length:
            if self.lap_start[who] is not None:
                self.out.lap_times[who].append(round(self.t - self.lap_start[who], 6))
            self.lap_start[who] = self.t

    # -- main loop -----------------------------------------------------------------------

    def run(self) -> RaceOutcome:
        sp = self.sp
        dt = sp.dt
        plan_every = max(int(round(1.0 / (sp.planner_hz * dt))), 1)
        max_steps = int(math.ceil((sp.max_learning_laps * self.L / max(self.line.v.min(), 0.5)
                                   + sp.target_overtakes * sp.attempt_timeout + 60.0) / dt))
        for k in range(1, max_steps + 1):
            v_limit = self.acc_limit()
            try:
                a_e, st_e = pure_pursuit_control(self.ego, self.path, self.s_ego, sp.pursuit, self.lim, v_limit)
            except TrackingError as exc:
                if self.crash("tracking"):
                    break
                continue
            a_o, st_o = self.control_opponent(k)
            self.ego = step_vehicle(self.ego, a_e, st_e, dt, self.lim)
            self.opp = step_vehicle(self.opp, a_o, st_o, dt, self.lim)
            self.t = k * dt
            try:
                s_e, self.d_ego = self.line.ref.to_frenet(self.ego.x, self.ego.y, self.s_ego)
            except OutOfDomainError:
                if self.crash("wall"):
                    break
                continue
            s_o, self.d_opp = self.line.ref.to_frenet(self.opp.x, self.opp.y, self.s_opp)
            s_own = self.env.opp_line.ref.to_frenet(self.opp.x, self.opp.y, self.s_opp_own)[0]
            self.travelled += forward_distance(self.s_ego, s_e, self.L) if signed_gap(self.s_ego, s_e, self.L) > 0 else 0.0
            self.laps("ego", self.s_ego, s_e, self.L)
            self.laps("opponent", self.s_opp_own, s_own, self.env.opp_line.lap_length)
            self.s_ego, self.s_opp, self.s_opp_own = s_e, s_o, s_own
            if self.record and k % sp.record_every == 0:
                self.out.trace.append((self.t, self.ego.x, self.ego.y, self.ego.v, self.opp.x, self.opp.y,
                                       self.opp.v, self.mode))

            self.observe(k)

            kind = detect_crash(self.ego, self.opp, self.env.track, self.lim)
            if kind is not None:
                if self.crash(kind):
                    break
                continue

            if self.mode == LEARN:
                if not self.try_fit():
                    break
                continue

            if k % plan_every == 0:
                self.plan_cycle()

            lead = signed_gap(self.s_opp, self.s_ego, self.L)
            self.hold = self.hold + dt if lead > self.lim.length else 0.0
            if self.hold >= sp.overtake_hold - 1e-9:
                self.out.n_overtakes += 1
                self.event("overtake", s_ego=self.s_ego, s_opp=self.s_opp, attempt_time=self.t - self.attempt_start)
                if self.out.n_overtakes >= sp.target_overtakes:
                    self.out.terminated = "target"
                    break
                self._respawn_ego()
                continue
            if self.t - self.attempt_start > sp.attempt_timeout:
                self.event("timeout", s_ego=self.s_ego, s_opp=self.s_opp)
                self.out.terminated = "timeout"
                break
        else:
            self.out.terminated = self.out.terminated or "max_time"
        self.out.sim_time = round(self.t, 6)
        self.out.plan_times = list(self.planner.timings)
        return self.out

    def crash(self, kind: str) -> bool:
        """Log a crash; returns True when the race should stop."""
        self.out.n_crashes += 1
        self.event("crash", kind=kind, mode=self.mode, s_ego=self.s_ego, s_opp=self.s_opp)
        if self.mode == LEARN or self.sp.stop_on_crash:
            self.out.terminated = "crash"
            return True
        self._respawn_ego()
        return False


def run_race(cfg: RaceConfig, record: bool = False) -> RaceOutcome:
    """Run one race; ``record`` keeps observations, a state trace and maneuvers."""
    return _Race(cfg, record).run()


# -- speed scaler search ---------------------------------------------------------------

def bisect_max(passes, lo: int, hi: int) -> int | None:
    """Largest integer in [lo, hi] where ``passes`` holds, assuming a pass/fail threshold.

    Returns None if ``lo`` fails. Ties between grid points resolve towards
    the lower value because only confirmed passes move the lower bracket.
    """
    if not passes(lo):
        return None
    if passes(hi):
        return hi
    good, bad = lo, hi
    while bad - good > 1:
        mid = (good + bad) // 2
        if passes(mid):
            good = mid
        else:
            bad = mid
    return good


@dataclass
class SmaxResult:
    s_max: float | None
    probes: dict
    r_otc: float
    outcome_metrics: dict | None = None
    plan_times: list = field(default_factory=list, repr=False)   # wall clock, all probes


def measure_smax(cfg: RaceConfig, planner: str | None = None, lo: float = 0.30, hi: float = 0.95,
                 resolution: float = 0.01) -> SmaxResult:
    """Largest speed scaler where a race reaches the overtake target without a crash."""
    base = cfg.with_overrides(planner=planner)
    base = replace(base, sim=replace(base.sim, stop_on_crash=True))
    probes: dict[float, dict] = {}
    times: list[float] = []

    def passes(i: int) -> bool:
        s = round(i * resolution, 10)
        out = run_race(replace(base, speed_scaler=s))
        probes[s] = out.metrics()
        times.extend(out.plan_times)
        return out.success

    lo_i = int(round(lo / resolution))
    best = bisect_max(passes, lo_i, int(round(hi / resolution)))
    if best is None:
        # below the search range; report the success rate seen at its lower end
        return SmaxResult(None, probes, probes[round(lo_i * resolution, 10)]["r_otc"], None, times)
    s_max = round(best * resolution, 10)
    m = probes[s_max]
    return SmaxResult(s_max, probes, m["r_otc"], m, times)
