"""Planner adapters used by the race loop.

Each adapter turns the ego's own Frenet state and its latest estimate of the
opponent into an evasion trajectory, or None when it does not want to (or
cannot) overtake right now.
"""

from __future__ import annotations

import time

from overtake.collision import PropagationParams, RegionOfCollision, predict_roc
from overtake.lines import RacingLine
from overtake.planner import EvasionTrajectory, PlannerWeights, baseline_spliner, plan_sqp
from overtake.track import FrenetState, signed_gap

PLANNERS = ("predictive", "spliner", "none")


class NoPlanner:
    """Following only: never starts a maneuver."""

    name = "none"

    def __init__(self):
        self.timings: list[float] = []
        self.last_roc: RegionOfCollision | None = None

    def reset(self) -> None:
        pass

    def plan(self, ego: FrenetState, opp: FrenetState, gp, line: RacingLine) -> EvasionTrajectory | None:
        return None


class SplinerPlanner(NoPlanner):
    """Lateral-shift spline around the opponent's current position, re-placed every cycle."""

    name = "spliner"

    def __init__(self, weights: PlannerWeights, activation_distance: float, clear_gap: float):
        super().__init__()
        self.weights = weights
        self.activation_distance = activation_distance
        self.clear_gap = clear_gap
        self.side: str | None = None

    def reset(self) -> None:
        self.side = None

    def plan(self, ego, opp, gp, line):
        gap = signed_gap(ego.s, opp.s, line.lap_length)
        if not -self.clear_gap < gap <= self.activation_distance:
            return None
        t0 = time.perf_counter()
        # the side is chosen once per maneuver and kept until reset
        traj = baseline_spliner(ego, opp, line, self.weights, side=self.side)
        self.timings.append(time.perf_counter() - t0)
        if not traj.feasible:
            return None
        self.side = traj.side
        return traj


class PredictivePlanner(NoPlanner):
    """Region-of-collision prediction followed by the SQP, warm-started from the last solution."""

    name = "predictive"

    def __init__(self, weights: PlannerWeights, propagation: PropagationParams):
        super().__init__()
        self.weights = weights
        self.propagation = propagation
        self.previous: EvasionTrajectory | None = None

    def reset(self) -> None:
        self.previous = None

    def plan(self, ego, opp, gp, line):
        t0 = time.perf_counter()
        roc = predict_roc(ego, opp.s, gp, self.propagation, line)
        traj = plan_sqp(ego, roc, gp, line, self.weights, warm_start=self.previous) if roc.valid else None
        self.timings.append(time.perf_counter() - t0)
        if traj is None or not traj.feasible:
            return None
        self.previous = traj
        self.last_roc = roc
        return traj


def make_planner(name: str, weights: PlannerWeights, propagation: PropagationParams,
                 activation_distance: float) -> NoPlanner:
    if name == "predictive":
        return PredictivePlanner(weights, propagation)
    if name == "spliner":
        return SplinerPlanner(weights, activation_distance, propagation.delta)
    if name == "none":
        return NoPlanner()
    raise ValueError(f"unknown planner {name!r}; expected one of {PLANNERS}")
