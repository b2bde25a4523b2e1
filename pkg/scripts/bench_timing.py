"""Per-cycle planning time: region prediction plus SQP on randomized scenarios.

Uses the same scenario generator as the test suite, so the numbers are
comparable with the acceptance check. Wall-clock times depend on the machine.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from helpers import planner_scenarios  # noqa: E402
from overtake.collision import PropagationParams, predict_roc  # noqa: E402
from overtake.planner import PlannerWeights, plan_sqp  # noqa: E402
from overtake.track import FrenetState  # noqa: E402


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", type=int, default=200, help="number of scenarios")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    weights, params = PlannerWeights(), PropagationParams()
    cases = []
    for line, ego, roc, gp in planner_scenarios(args.n, seed=5):
        # place the opponent where the random region starts, at the speed the GP predicts
        gap = (roc.c_start - ego.s) % line.lap_length + params.delta
        cases.append((line, ego, (ego.s + gap) % line.lap_length, gp))

    roc_t, sqp_t, iters = [], [], []
    for _ in range(args.repeat):
        for line, ego, opp_s, gp in cases:
            t0 = time.perf_counter()
            roc = predict_roc(FrenetState(ego.s, ego.d, ego.v_s, ego.v_d), opp_s, gp, params, line)
            t1 = time.perf_counter()
            if not roc.valid:
                continue
            traj = plan_sqp(ego, roc, gp, line, weights)
            t2 = time.perf_counter()
            roc_t.append(t1 - t0)
            sqp_t.append(t2 - t1)
            iters.append(traj.info.get("iterations", 0))

    total = (np.array(roc_t) + np.array(sqp_t)) * 1e3
    print(f"{len(total)} planning cycles ({args.n} scenarios x {args.repeat})")
    print(f"  region prediction  {np.mean(roc_t) * 1e3:6.2f} ms mean")
    print(f"  SQP                {np.mean(sqp_t) * 1e3:6.2f} ms mean, {np.mean(iters):.1f} iterations")
    print(f"  total              {total.mean():6.2f} +- {total.std():.2f} ms, "
          f"p50 {np.percentile(total, 50):.2f}  p95 {np.percentile(total, 95):.2f}  max {total.max():.2f}")


if __name__ == "__main__":
    main()
