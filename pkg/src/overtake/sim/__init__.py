"""Deterministic 2D race simulation around the planners."""

from overtake.sim.race import RaceConfig, RaceOutcome, load_config, measure_smax, run_race
from overtake.sim.vehicle import VehicleState, detect_crash, step_vehicle

__all__ = ["RaceConfig", "RaceOutcome", "VehicleState", "detect_crash", "load_config", "measure_smax",
           "run_race", "step_vehicle"]
