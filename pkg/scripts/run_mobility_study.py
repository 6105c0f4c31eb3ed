#!/usr/bin/env python3
"""Evaluate a pretrained agent under node mobility.

Runs both mobility models over shared trajectories and emits per-second mean
sum rates for the agent and the closest-to-destination benchmark, plus a
stale-decision variant with a long decision interval.
"""

import argparse
import sys
from pathlib import Path

from hwnroute.config import load_scenario, scenario_from_dict, scenario_to_dict
from hwnroute.experiments import mobility_eval


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default="scenarios/fig8_mobility.json")
    parser.add_argument("--checkpoint", required=True)
    parser.add_argument("--out", default="out/mobility")
    parser.add_argument("--seeds", type=int, default=500)
    args = parser.parse_args()

    cfg = load_scenario(args.config)
    out = Path(args.out)
    for model in ("random_walk", "random_waypoint"):
        data = scenario_to_dict(cfg)
        data["mobility"]["model"] = model
        sub = scenario_from_dict(data)
        means = mobility_eval(sub, checkpoint=args.checkpoint, n_seeds=args.seeds,
                              out_dir=out / model,
                              schemes=["dqn", "closest_to_destination"])
        print(f"{model}:")
        for scheme, series in means.items():
            print(f"  {scheme:25s} t=0 {series[0] / 1e6:7.3f}  "
                  f"t={len(series) - 1} {series[-1] / 1e6:7.3f} Mbit/s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
