#!/usr/bin/env python3
"""Regenerate the shipped scenario presets in scenarios/.

Each file is a desk-scale starting point for one experiment family; the CLI
consumes them directly and flags like --seeds override the counts.
"""

from pathlib import Path

from hwnroute.config import (MobilityConfig, ScenarioConfig, TechConfig,
                             TrainConfig, save_scenario)

OUT = Path(__file__).resolve().parent.parent / "scenarios"

FREQS_MHZ = (40, 80, 200, 400, 800, 2000, 3000)


def techs(subbands: int = 1, count: int = 7) -> list[TechConfig]:
    return [TechConfig(f * 1e6, subbands) for f in FREQS_MHZ[:count]]


def base(**overrides) -> ScenarioConfig:
    defaults = dict(
        relay_count=27,
        flow_count=2,
        e_nei=10,
        techs=techs(),
        neighbor_strategy="rate",
        policy="dqn",
        train=TrainConfig(episodes=12_000, train_steps_per_episode=2),
        eval_topologies=200,
        seed=11,
    )
    defaults.update(overrides)
    return ScenarioConfig(**defaults)


SCENARIOS = {
    # Benchmark comparison in the path-loss environment.
    "fig4_pathloss": base(),
    # Subband count sweep at fixed 1% total bandwidth per technology:
    #   hwnroute sweep --axis subbands --values 1,2,5,8,15
    "fig5_subbands": base(policy="widest_path", flow_count=3,
                          eval_topologies=300),
    # Neighbor-selection strategies; run eval three times overriding
    # neighbor_strategy (distance | channel | rate) with one checkpoint.
    "fig6_neighbor": base(techs=techs(count=3), eval_topologies=300),
    # Pretrained agent under node mobility, fresh decisions every second.
    "fig8_mobility": base(mobility=MobilityConfig(model="random_walk",
                                                  mobile_count=20,
                                                  horizon_s=60,
                                                  decision_interval_s=1)),
    # Density generalization: train copies of this scenario with
    # relay_count in {27, 45, 90}, then eval each checkpoint at 90.
    "fig10_density": base(relay_count=90, eval_topologies=200),
    # Resource-count generalization at a mid-density network:
    #   hwnroute sweep --axis resource_count --values 1,2,3,4,5,6,7
    "fig11_resources": base(relay_count=60, eval_topologies=200),
    # Flow-count generalization:
    #   hwnroute sweep --axis flow_count --values 1,2,3,4
    "fig12_flows": base(flow_count=4, eval_topologies=200),
}


def main() -> None:
    OUT.mkdir(exist_ok=True)
    for name, cfg in SCENARIOS.items():
        cfg.validate()
        save_scenario(cfg, OUT / f"{name}.json")
        print(f"wrote scenarios/{name}.json")


if __name__ == "__main__":
    main()
