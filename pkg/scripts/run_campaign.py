"""Full speed-scaler campaign: S_max and success rate per track, behavior and planner.

Writes ``table.csv``, ``table.txt`` and ``campaign.json`` to ``--out`` and
prints the table. Same as ``overtake bench --config configs/bench_table.json``
plus the wall-clock time of every cell.
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from overtake.cli import bench_configs
from overtake.report import BenchCell, format_table, timing_stats, write_table_csv
from overtake.sim.race import RaceConfig, measure_smax, read_config_dict

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "bench_table.json"))
    ap.add_argument("--out", default="runs/campaign")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()

    data = read_config_dict(args.config)
    bench = data.pop("bench", {})
    base = RaceConfig.from_dict(data, base_dir=Path(args.config).parent).with_overrides(seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cells, log = [], []
    t_all = time.perf_counter()
    for cfg in bench_configs(base, bench):
        t0 = time.perf_counter()
        res = measure_smax(cfg)
        mean, std = timing_stats(res.plan_times)
        cells.append(BenchCell(cfg.track, cfg.behavior, cfg.planner, res.s_max, res.r_otc, mean, std,
                               len(res.plan_times)))
        wall = time.perf_counter() - t0
        probes = {f"{s:.2f}": [m["n_overtakes"], m["n_crashes"], m["terminated"]] for s, m in sorted(res.probes.items())}
        log.append({"track": cfg.track, "behavior": cfg.behavior, "planner": cfg.planner, "s_max": res.s_max,
                    "r_otc": res.r_otc, "wall_s": wall, "probes": probes})
        s = "<0.30" if res.s_max is None else f"{res.s_max:.2f}"
        print(f"{cfg.track:13s} {cfg.behavior:13s} {cfg.planner:10s} S_max {s}  R {res.r_otc:.2f}  ({wall:.0f} s)",
              flush=True)
    total = time.perf_counter() - t_all

    h = base.config_hash()
    write_table_csv(cells, out / "table.csv", f"config_hash={h}")
    text = format_table(cells)
    (out / "table.txt").write_text(f"# config_hash={h}\n" + text)
    (out / "campaign.json").write_text(json.dumps({"config_hash": h, "total_s": total, "cells": log}, indent=1) + "\n")
    print()
    print(text, end="")
    print(f"campaign finished in {total:.0f} s -> {out}")


if __name__ == "__main__":
    main()
