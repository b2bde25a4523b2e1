"""Command-line entry point: ``overtake {race,smax,bench,plot}``.

Exit codes: 0 success, 2 configuration or input error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from overtake.gp import OpponentObservation, OpponentTrajectoryGP
from overtake.report import BenchCell, format_table, timing_stats, write_table_csv
from overtake.sim.race import (
    ConfigError,
    RaceConfig,
    build_environment,
    measure_smax,
    read_config_dict,
    resolve_track,
    run_race,
)

log = logging.getLogger("overtake")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class InputError(Exception):
    """Missing or malformed artifacts given to a command."""


# -- config ------------------------------------------------------------------------

def load_experiment(args) -> tuple[RaceConfig, dict]:
    """Race config with command-line overrides, plus the optional ``bench`` block."""
    if args.config is None:
        raise ConfigError("--config is required for this command")
    data = read_config_dict(args.config)
    bench = data.pop("bench", {})
    cfg = RaceConfig.from_dict(data, base_dir=Path(args.config).parent)
    cfg = cfg.with_overrides(seed=args.seed, planner=args.planner, behavior=args.behavior, speed_scaler=args.s)
    resolve_track(cfg.track, cfg.base_dir)  # a bad path is a config error, not a failure mid-run
    return cfg, bench


def _out_dir(args, default: str) -> Path:
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


# -- commands -------------------------------------------------------------------------

def cmd_race(args) -> int:
    cfg, _ = load_experiment(args)
    out = _out_dir(args, "runs/race")
    h = cfg.config_hash()
    log.info("race %s: %s vs %s at S=%.2f (seed %d)", h, cfg.planner, cfg.behavior, cfg.speed_scaler, cfg.seed)
    res = run_race(cfg, record=True)
    mean, std = timing_stats(res.plan_times)

    _write_json(out / "config.json", {"config_hash": h, "config": cfg.to_dict(),
                                      "track_path": str(resolve_track(cfg.track, cfg.base_dir))})
    _write_json(out / "events.json", {"config_hash": h, "events": res.events})
    _write_json(out / "metrics.json", {"config_hash": h, **res.metrics()})
    _write_json(out / "timing.json", {"config_hash": h, "plan_ms_mean": mean, "plan_ms_std": std,
                                      "n_plans": len(res.plan_times)})
    with open(out / "trajectory.csv", "w", newline="") as fh:
        fh.write(f"# config_hash={h}\n")
        w = csv.writer(fh)
        w.writerow(["t", "ego_x", "ego_y", "ego_v", "opp_x", "opp_y", "opp_v", "mode"])
        for row in res.trace:
            w.writerow([f"{v:.6f}" if isinstance(v, float) else v for v in row])
    with open(out / "observations.csv", "w", newline="") as fh:
        fh.write(f"# config_hash={h}\n")
        w = csv.writer(fh)
        w.writerow(["t", "s", "d", "v_s"])
        for o in res.observations:
            w.writerow([f"{o.timestamp:.6f}", f"{o.s:.6f}", f"{o.d:.6f}", f"{o.v_s:.6f}"])
    if res.gp is not None:
        res.gp.to_json(out / "gp.json")
    line = build_environment(cfg).ego_line
    for k, traj in enumerate(res.maneuvers):
        traj.to_csv(out / f"maneuver_{k:03d}.csv", line, f"config_hash={h}")

    m = res.metrics()
    print(f"overtakes {m['n_overtakes']}  crashes {m['n_crashes']}  aborts {m['n_aborts']}  "
          f"R={m['r_otc']:.2f}  ended: {m['terminated']}  plan {mean:.2f} +- {std:.2f} ms  -> {out}")
    return EXIT_OK


def cmd_smax(args) -> int:
    cfg, _ = load_experiment(args)
    out = _out_dir(args, "runs/smax")
    res = measure_smax(cfg)
    mean, std = timing_stats(res.plan_times)
    h = cfg.config_hash()
    _write_json(out / "smax.json", {
        "config_hash": h, "planner": cfg.planner, "behavior": cfg.behavior, "s_max": res.s_max,
        "r_otc": res.r_otc, "probes": {f"{s:.2f}": m for s, m in sorted(res.probes.items())},
        "plan_ms_mean": mean, "plan_ms_std": std,
    })
    s = "<0.30" if res.s_max is None else f"{res.s_max:.2f}"
    print(f"{cfg.planner} vs {cfg.behavior} on {cfg.track}: S_max {s}  R={res.r_otc:.2f}  -> {out}")
    return EXIT_OK


def _bench_cell(cfg: RaceConfig) -> BenchCell:
    res = measure_smax(cfg)
    mean, std = timing_stats(res.plan_times)
    return BenchCell(cfg.track, cfg.behavior, cfg.planner, res.s_max, res.r_otc, mean, std, len(res.plan_times))


def bench_configs(cfg: RaceConfig, bench: dict) -> list[RaceConfig]:
    unknown = set(bench) - {"tracks", "behaviors", "planners"}
    if unknown:
        raise ConfigError(f"bench: unknown keys {sorted(unknown)}")
    tracks = bench.get("tracks", [cfg.track])
    behaviors = bench.get("behaviors", [cfg.behavior])
    planners = bench.get("planners", ["predictive", "spliner"])
    return [cfg.with_overrides(track=t, behavior=b, planner=p) for t in tracks for b in behaviors for p in planners]


def run_bench(configs: list[RaceConfig], workers: int = 1) -> list[BenchCell]:
    """Measure every cell; results are keyed by cell so arrival order does not matter."""
    if workers <= 1:
        cells = [_bench_cell(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_bench_cell, configs))
    return sorted(cells, key=lambda c: c.key)


def cmd_bench(args) -> int:
    cfg, bench = load_experiment(args)
    configs = bench_configs(cfg, bench)
    for c in configs:
        resolve_track(c.track, c.base_dir)
    out = _out_dir(args, "runs/bench")
    h = cfg.config_hash()
    log.info("bench %s: %d cells on %d worker(s)", h, len(configs), args.workers)
    cells = run_bench(configs, args.workers)
    write_table_csv(cells, out / "table.csv", f"config_hash={h}")
    text = format_table(cells)
    (out / "table.txt").write_text(f"# config_hash={h}\n" + text)
    _write_json(out / "bench.json", {"config_hash": h, "cells": [c.__dict__ for c in cells]})
    print(text, end="")
    return EXIT_OK


def _read_trace(path: Path):
    ego, opp = [], []
    with open(path, newline="") as fh:
        rows = csv.DictReader(line for line in fh if not line.startswith("#"))
        for r in rows:
            ego.append((float(r["ego_x"]), float(r["ego_y"])))
            opp.append((float(r["opp_x"]), float(r["opp_y"])))
    return ego, opp


def cmd_plot(args) -> int:
    from overtake.plots import gp_svg, track_svg

    run = Path(args.out or "runs/race")
    needed = ["config.json", "events.json", "gp.json", "observations.csv", "trajectory.csv"]
    missing = [n for n in needed if not (run / n).is_file()]
    if missing:
        raise InputError(f"{run}: missing artifacts {missing}; run `overtake race --out {run}` first")
    meta = json.loads((run / "config.json").read_text())
    h = meta["config_hash"]
    cfg = replace(RaceConfig.from_dict(meta["config"]), track=meta.get("track_path", meta["config"]["track"]))
    gp = OpponentTrajectoryGP.from_json(run / "gp.json")
    with open(run / "observations.csv", newline="") as fh:
        obs = [OpponentObservation(float(r["s"]), float(r["d"]), float(r["v_s"]), float(r["t"]))
               for r in csv.DictReader(line for line in fh if not line.startswith("#"))]
    events = json.loads((run / "events.json").read_text())["events"]
    rocs = [(e["c_start"], e["c_end"]) for e in events if e["type"] == "maneuver" and "c_start" in e]
    ego, opp = _read_trace(run / "trajectory.csv")
    env = build_environment(replace(cfg, behavior="racing_line"))
    (run / "gp.svg").write_text(gp_svg(gp, obs, comment=f"config_hash={h}"))
    (run / "track.svg").write_text(track_svg(env.track, env.ego_line, rocs, ego, opp, comment=f"config_hash={h}"))
    print(f"wrote {run / 'gp.svg'} and {run / 'track.svg'}")
    return EXIT_OK


COMMANDS = {"race": cmd_race, "smax": cmd_smax, "bench": cmd_bench, "plot": cmd_plot}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="overtake", description="Overtaking planner races and benchmarks.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="experiment config (JSON)")
    p.add_argument("--out", help="output directory (for plot: the race run directory)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int, default=1, help="parallel races for bench")
    p.add_argument("--planner", help="override the planner (predictive, spliner, none)")
    p.add_argument("--behavior", help="override the opponent behavior (name or I-IV)")
    p.add_argument("--s", type=float, help="override the speed scaler")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - every other failure maps to one exit code
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
