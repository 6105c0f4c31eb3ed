"""Command-line interface: train, eval, sweep, mobility.

Every command takes a scenario file via --config; outputs land in --out or,
when omitted, in $HWNROUTE_OUT (default ./out). See the README for the file
formats each command emits.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import SWEEP_AXES, load_scenario
from .experiments import evaluate, mobility_eval, sweep, train


def _default_out() -> str:
    return os.environ.get("HWNROUTE_OUT", "out")


def _add_common(parser: argparse.ArgumentParser, checkpoint_required: bool) -> None:
    parser.add_argument("--config", required=True, help="scenario JSON file")
    parser.add_argument("--checkpoint", required=checkpoint_required,
                        help="model checkpoint file")
    parser.add_argument("--out", default=None, help="output directory "
                        "(default $HWNROUTE_OUT or ./out)")
    parser.add_argument("--seeds", type=int, default=None,
                        help="number of topology seeds")
    parser.add_argument("--threads", type=int, default=1,
                        help="parallel evaluation workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hwnroute",
                                     description="multi-hop routing experiments "
                                                 "for heterogeneous wireless networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train the routing agent")
    _add_common(p_train, checkpoint_required=False)

    p_eval = sub.add_parser("eval", help="evaluate schemes over shared topologies")
    _add_common(p_eval, checkpoint_required=False)

    p_sweep = sub.add_parser("sweep", help="evaluate the configured policy "
                                           "along one scenario axis")
    _add_common(p_sweep, checkpoint_required=False)
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated axis values, e.g. 1,2,5,8,15")

    p_mob = sub.add_parser("mobility", help="per-second sum rate under node mobility")
    _add_common(p_mob, checkpoint_required=False)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_scenario(args.config)
    out = Path(args.out if args.out is not None else _default_out())

    if args.command == "train":
        result = train(cfg, out, resume_checkpoint=args.checkpoint)
        print(f"checkpoint: {result['checkpoint']}")
        print(f"loss log:   {result['loss_csv']} ({result['train_steps']} steps)")
        return 0

    if args.command == "eval":
        schemes = list(cfg.schemes)
        if args.checkpoint is None and "dqn" in schemes:
            schemes.remove("dqn")
            print("no --checkpoint given; skipping the dqn scheme")
        table = evaluate(cfg, checkpoint=args.checkpoint,
                         n_topologies=args.seeds, out_dir=out,
                         threads=args.threads, schemes=schemes)
        for scheme, rates in table.items():
            print(f"{scheme}: mean sum rate {rates.mean() / 1e6:.3f} Mbit/s "
                  f"over {len(rates)} topologies")
        print(f"wrote results.csv and per-scheme CDFs to {out}")
        return 0

    if args.command == "sweep":
        values = [int(v) for v in args.values.split(",")]
        rows = sweep(cfg, args.axis, values, checkpoint=args.checkpoint,
                     n_topologies=args.seeds, out_dir=out, threads=args.threads)
        for value, mean, stderr in rows:
            print(f"{args.axis}={value}: {mean / 1e6:.3f} "
                  f"+/- {stderr / 1e6:.3f} Mbit/s")
        print(f"wrote sweep.csv to {out}")
        return 0

    if args.command == "mobility":
        schemes = [cfg.policy] if cfg.policy != "dqn" else ["dqn",
                                                            "closest_to_destination"]
        n_seeds = args.seeds if args.seeds is not None else 500
        means = mobility_eval(cfg, checkpoint=args.checkpoint, n_seeds=n_seeds,
                              out_dir=out, schemes=schemes)
        for scheme, series in means.items():
            print(f"{scheme}: t=0 {series[0] / 1e6:.3f} Mbit/s, "
                  f"t={len(series) - 1} {series[-1] / 1e6:.3f} Mbit/s")
        print(f"wrote mobility.csv to {out}")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
