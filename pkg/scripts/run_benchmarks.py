#!/usr/bin/env python3
"""Train the agent and compare it against every benchmark scheme.

Desk-scale reproduction of the main comparison: trains on the fig4 scenario,
then evaluates all schemes over shared topology seeds and prints the mean
sum rates alongside the emitted CDF files.
"""

import argparse
import sys
from pathlib import Path

from hwnroute.config import load_scenario
from hwnroute.experiments import evaluate, train


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default="scenarios/fig4_pathloss.json")
    parser.add_argument("--out", default="out/benchmarks")
    parser.add_argument("--seeds", type=int, default=200)
    parser.add_argument("--episodes", type=int, default=None,
                        help="override training episode count")
    args = parser.parse_args()

    cfg = load_scenario(args.config)
    if args.episodes is not None:
        cfg.train.episodes = args.episodes
    out = Path(args.out)

    print(f"training for {cfg.train.episodes} episodes ...")
    result = train(cfg, out)
    print(f"checkpoint: {result['checkpoint']}")

    table = evaluate(cfg, checkpoint=result["checkpoint"],
                     n_topologies=args.seeds, out_dir=out)
    print(f"\nmean sum rate over {args.seeds} topologies:")
    for scheme, rates in sorted(table.items(), key=lambda kv: -kv[1].mean()):
        print(f"  {scheme:25s} {rates.mean() / 1e6:8.3f} Mbit/s")
    print(f"\nCDF data written to {out}/cdf_<scheme>.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
