"""Experiment harness: training, paired evaluation, axis sweeps, mobility runs.

Every scheme in an evaluation faces the same topology seeds, so comparisons
are paired per placement. All outputs are plain CSV with documented headers;
per-scheme CDF files hold the sorted sum rates with cumulative probability.
Single-threaded runs are byte-deterministic; parallel evaluation aggregates
results sorted by seed so the emitted files are identical either way.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import (STREAM_EVAL_TOPO, STREAM_MOBILITY, STREAM_TRAIN_EPS,
                     STREAM_TRAIN_SAMPLE, STREAM_TRAIN_TOPO, ScenarioConfig,
                     make_feature_norm, make_state, scenario_from_dict,
                     scenario_to_dict, topology_seed)
from .dqn import DQNPolicy, ReplayBuffer, epsilon, record_route, train_step
from .mobility import MobilityState, choose_mobile_relays, run_mobility_experiment, simulate_positions
from .qnet import Adam, QNet, load_checkpoint, save_checkpoint
from .router import BaselinePolicy, build_route, establish_all, reestablish


def make_policy(cfg: ScenarioConfig, name: str, net: QNet | None = None,
                eps: float = 0.0, rng: np.random.Generator | None = None):
    if name == "dqn":
        if net is None:
            raise ValueError("dqn policy requires a loaded network")
        return DQNPolicy(net, make_feature_norm(cfg), eps=eps, rng=rng)
    return BaselinePolicy(name)


def _hop_cap(cfg: ScenarioConfig) -> int:
    return max(2, cfg.hop_cap_factor * cfg.relay_count)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def train(cfg: ScenarioConfig, out_dir, resume_checkpoint=None,
          stop_after: int | None = None) -> dict:
    """Train the routing agent over randomized topologies.

    Context flows (all but the last) are routed by the closest-to-destination
    scheme; only the last flow's trajectory feeds the replay buffer. Writes
    checkpoint.qnet, a training-state sidecar for exact resume, and loss.csv
    with one row per gradient step. stop_after interrupts the run after that
    many episodes; resuming the interrupted checkpoint under the same config
    reproduces the uninterrupted run exactly.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    feature_dim = 5 * cfg.e_nei

    start_episode = 0
    net = QNet.create(cfg.e_nei, seed=cfg.seed)
    optimizer = Adam(net, learning_rate=cfg.train.learning_rate)
    buffer = ReplayBuffer(cfg.train.replay_capacity, feature_dim)
    global_step = 0
    if resume_checkpoint is not None:
        net = load_checkpoint(resume_checkpoint)
        optimizer = Adam(net, learning_rate=cfg.train.learning_rate)
        sidecar = Path(str(resume_checkpoint) + ".trainstate.npz")
        if not sidecar.exists():
            raise FileNotFoundError(f"missing training-state sidecar {sidecar}")
        with np.load(sidecar) as arrays:
            optimizer.load_state_arrays(arrays)
            buffer.load_state_arrays(arrays)
            start_episode = int(arrays["next_episode"][0])
            global_step = int(arrays["global_step"][0])

    context_policy = BaselinePolicy("closest_to_destination")
    norm = make_feature_norm(cfg)
    hop_cap = _hop_cap(cfg)
    loss_rows = []
    episode_rows = []
    total = cfg.train.episodes
    last_episode = total if stop_after is None else min(total, stop_after)
    for t in range(start_episode, last_episode):
        eps = epsilon(t, total)
        state = make_state(cfg, topology_seed(cfg, STREAM_TRAIN_TOPO, t))
        for f in range(cfg.flow_count - 1):
            build_route(state, f, context_policy, cfg.neighbor_strategy,
                        cfg.e_nei, hop_cap)
        agent_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(
            entropy=cfg.seed, spawn_key=(STREAM_TRAIN_EPS, t))))
        agent = DQNPolicy(net, norm, eps=eps, rng=agent_rng)
        last = cfg.flow_count - 1
        result = build_route(state, last, agent, cfg.neighbor_strategy,
                             cfg.e_nei, hop_cap)
        route = state.routes[last]
        record_route(buffer, agent.trajectory, route, state, episode=t)
        reward = state.route_rate(route) if route is not None and \
            route.is_complete(state.topology) else 0.0
        episode_rows.append((t, eps, reward))
        if len(buffer) >= cfg.train.batch_size:
            for _ in range(cfg.train.train_steps_per_episode):
                sample_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(
                    entropy=cfg.seed, spawn_key=(STREAM_TRAIN_SAMPLE, global_step))))
                loss = train_step(net, optimizer, buffer, cfg.train.batch_size,
                                  sample_rng, cfg.train.reward_scale)
                loss_rows.append((global_step, t, loss))
                global_step += 1

    checkpoint = out / "checkpoint.qnet"
    save_checkpoint(checkpoint, net)
    sidecar_arrays = {"next_episode": np.array([last_episode]),
                      "global_step": np.array([global_step])}
    sidecar_arrays.update(optimizer.state_arrays())
    sidecar_arrays.update(buffer.state_arrays())
    np.savez(Path(str(checkpoint) + ".trainstate.npz"), **sidecar_arrays)

    loss_path = out / "loss.csv"
    with open(loss_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "episode", "loss"])
        for row in loss_rows:
            w.writerow([row[0], row[1], repr(row[2])])
    episodes_path = out / "episodes.csv"
    with open(episodes_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["episode", "epsilon", "reward_bps"])
        for row in episode_rows:
            w.writerow([row[0], repr(row[1]), repr(row[2])])
    return {"checkpoint": checkpoint, "loss_csv": loss_path,
            "episodes_csv": episodes_path, "train_steps": global_step}


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def evaluate_schemes_on_seed(cfg: ScenarioConfig, schemes: list[str],
                             seed_index: int, net: QNet | None,
                             rounds: int | None = None) -> dict[str, float]:
    """Sum rate of every scheme on one shared topology placement."""
    seed = topology_seed(cfg, STREAM_EVAL_TOPO, seed_index)
    rounds = cfg.reestablish_rounds if rounds is None else rounds
    rates = {}
    base_state = make_state(cfg, seed)
    for scheme in schemes:
        state = base_state.clone_empty()   # identical placement and channel draws
        policy = make_policy(cfg, scheme, net=net)
        establish_all(state, policy, cfg.neighbor_strategy, cfg.e_nei, _hop_cap(cfg))
        reestablish(state, policy, cfg.neighbor_strategy, cfg.e_nei,
                    _hop_cap(cfg), rounds=rounds)
        rates[scheme] = state.sum_rate()
    return rates


def _eval_worker(args) -> tuple[int, dict[str, float]]:
    cfg_dict, schemes, seed_index, checkpoint = args
    cfg = scenario_from_dict(cfg_dict)
    net = load_checkpoint(checkpoint) if checkpoint is not None else None
    return seed_index, evaluate_schemes_on_seed(cfg, schemes, seed_index, net)


def evaluate(cfg: ScenarioConfig, checkpoint=None, n_topologies: int | None = None,
             out_dir=None, threads: int = 1,
             schemes: list[str] | None = None) -> dict:
    """Paired evaluation over topology seeds; writes results and CDF files."""
    schemes = list(schemes if schemes is not None else cfg.schemes)
    if "dqn" in schemes and checkpoint is None:
        raise ValueError("evaluating the dqn scheme requires a checkpoint")
    n = n_topologies if n_topologies is not None else cfg.eval_topologies
    net = load_checkpoint(checkpoint) if checkpoint is not None else None

    results: list[tuple[int, dict[str, float]]] = []
    if threads <= 1:
        for i in range(n):
            results.append((i, evaluate_schemes_on_seed(cfg, schemes, i, net)))
    else:
        cfg_dict = scenario_to_dict(cfg)
        jobs = [(cfg_dict, schemes, i, checkpoint) for i in range(n)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_eval_worker, jobs))
    results.sort(key=lambda r: r[0])

    table = {scheme: np.array([rates[scheme] for _i, rates in results])
             for scheme in schemes}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "results.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["topology_seed", "scheme", "sum_rate_bps"])
            for i, rates in results:
                for scheme in schemes:
                    w.writerow([i, scheme, repr(rates[scheme])])
        for scheme in schemes:
            sorted_rates = np.sort(table[scheme])
            with open(out / f"cdf_{scheme}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["sum_rate_bps", "cdf"])
                for k, rate in enumerate(sorted_rates):
                    w.writerow([repr(float(rate)), repr((k + 1) / len(sorted_rates))])
    return table


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def apply_axis(cfg: ScenarioConfig, axis: str, value: int) -> ScenarioConfig:
    """Scenario variant with one swept quantity changed."""
    data = scenario_to_dict(cfg)
    if axis == "subbands":
        for tech in data["techs"]:
            tech["subbands"] = int(value)
    elif axis == "relay_count":
        data["relay_count"] = int(value)
    elif axis == "resource_count":
        base = data["techs"]
        if value > len(base):
            raise ValueError(f"resource_count {value} exceeds the {len(base)} "
                             f"configured technologies")
        data["techs"] = [dict(t, subbands=1) for t in base[:int(value)]]
    elif axis == "flow_count":
        data["flow_count"] = int(value)
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    return scenario_from_dict(data)


def sweep(cfg: ScenarioConfig, axis: str, values, checkpoint=None,
          n_topologies: int | None = None, out_dir=None,
          threads: int = 1) -> list[tuple[int, float, float]]:
    """Evaluate the configured policy at each axis value with shared seeds.

    Returns (value, mean, stderr) rows and writes sweep.csv when out_dir is
    given.
    """
    rows = []
    for value in values:
        sub_cfg = apply_axis(cfg, axis, value)
        table = evaluate(sub_cfg, checkpoint=checkpoint, n_topologies=n_topologies,
                         out_dir=None, threads=threads, schemes=[cfg.policy])
        rates = table[cfg.policy]
        mean = float(rates.mean())
        stderr = float(rates.std(ddof=1) / np.sqrt(len(rates))) if len(rates) > 1 else 0.0
        rows.append((int(value), mean, stderr))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([axis, "mean_sum_rate_bps", "stderr_bps"])
            for value, mean, stderr in rows:
                w.writerow([value, repr(mean), repr(stderr)])
    return rows


# ---------------------------------------------------------------------------
# Mobility
# ---------------------------------------------------------------------------

def mobility_series_for_seed(cfg: ScenarioConfig, scheme: str, seed_index: int,
                             net: QNet | None, model: str | None = None,
                             decision_interval_s: int | None = None) -> np.ndarray:
    """Per-second sum-rate series for one scheme on one seeded trajectory."""
    mob = cfg.mobility
    model = model if model is not None else mob.model
    interval = (decision_interval_s if decision_interval_s is not None
                else mob.decision_interval_s)
    topo_seed = topology_seed(cfg, STREAM_EVAL_TOPO, seed_index)
    move_seed = topology_seed(cfg, STREAM_MOBILITY, seed_index)
    state = make_state(cfg, topo_seed)
    base_positions = state.topology.positions()
    mobile = choose_mobile_relays(cfg.relay_count, mob.mobile_count, move_seed)
    ms = MobilityState.create(model, mobile, base_positions[mobile], cfg.area_m,
                              seed=move_seed, speed_max=mob.speed_max_mps)
    series_positions = simulate_positions(base_positions, ms, mob.horizon_s)
    policy = make_policy(cfg, scheme, net=net)
    return run_mobility_experiment(state, policy, series_positions, interval,
                                   cfg.neighbor_strategy, cfg.e_nei, _hop_cap(cfg))


def mobility_eval(cfg: ScenarioConfig, checkpoint=None, n_seeds: int = 500,
                  out_dir=None, schemes: list[str] | None = None) -> dict:
    """Mean per-second sum rate across seeded mobile topologies.

    Every scheme replays identical position trajectories. Writes
    mobility.csv with one row per (second, scheme).
    """
    schemes = list(schemes if schemes is not None else [cfg.policy])
    net = load_checkpoint(checkpoint) if checkpoint is not None else None
    if "dqn" in schemes and net is None:
        raise ValueError("evaluating the dqn scheme requires a checkpoint")
    horizon = cfg.mobility.horizon_s
    sums = {scheme: np.zeros(horizon + 1) for scheme in schemes}
    for i in range(n_seeds):
        for scheme in schemes:
            sums[scheme] += mobility_series_for_seed(cfg, scheme, i, net)
    means = {scheme: sums[scheme] / n_seeds for scheme in schemes}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "mobility.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "scheme", "mean_sum_rate_bps"])
            for t in range(horizon + 1):
                for scheme in schemes:
                    w.writerow([t, scheme, repr(float(means[scheme][t]))])
    return means
