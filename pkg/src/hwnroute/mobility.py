"""Node mobility models and time-stepped evaluation of frozen vs fresh routes.

A chosen subset of relay nodes moves inside the area, either by a random
walk (direction and speed redrawn every second, boundary reflections) or by
a random waypoint rule (head to a uniform target at a speed redrawn every
second, pick a new target on arrival). The evaluation loop advances time in
one-second steps, re-establishes routes only at the configured decision
instants, and scores the sum rate every second so route staleness between
decisions is visible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .netmodel import NetworkState
from .router import establish_all

MODELS = ("random_walk", "random_waypoint")


@dataclass
class MobilityState:
    """Kinematic state of the mobile nodes.

    positions are the mobile nodes' coordinates (z is preserved untouched);
    directions are current headings (random walk), waypoints current targets
    (random waypoint). All draws come from the carried generator, so a fixed
    seed fixes the whole trajectory.
    """

    model: str
    node_ids: np.ndarray       # global node ids of the mobile subset
    positions: np.ndarray      # (K, 3)
    directions: np.ndarray     # (K,) radians
    waypoints: np.ndarray      # (K, 3)
    speed_max: float
    area_m: float
    rng: np.random.Generator

    @classmethod
    def create(cls, model: str, node_ids, positions, area_m: float,
               seed: int, speed_max: float = 5.0) -> "MobilityState":
        if model not in MODELS:
            raise ValueError(f"unknown mobility model {model!r}")
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        pos = np.asarray(positions, dtype=float).copy()
        k = pos.shape[0]
        directions = rng.uniform(0.0, 2.0 * np.pi, size=k)
        waypoints = pos.copy()
        waypoints[:, :2] = rng.uniform(0.0, area_m, size=(k, 2))
        return cls(model, np.asarray(node_ids, dtype=int), pos, directions,
                   waypoints, speed_max, area_m, rng)


def _reflect(coord: float, lo: float, hi: float) -> tuple[float, bool]:
    flipped = False
    while coord < lo or coord > hi:
        if coord < lo:
            coord = 2.0 * lo - coord
        else:
            coord = 2.0 * hi - coord
        flipped = not flipped
    return coord, flipped


def step_random_walk(ms: MobilityState, dt: float = 1.0) -> MobilityState:
    """Redraw heading and speed for every node, advance, reflect at walls."""
    k = ms.positions.shape[0]
    directions = ms.rng.uniform(0.0, 2.0 * np.pi, size=k)
    speeds = ms.rng.uniform(0.0, ms.speed_max, size=k)
    pos = ms.positions.copy()
    for i in range(k):
        x = pos[i, 0] + speeds[i] * dt * np.cos(directions[i])
        y = pos[i, 1] + speeds[i] * dt * np.sin(directions[i])
        x, flip_x = _reflect(x, 0.0, ms.area_m)
        y, flip_y = _reflect(y, 0.0, ms.area_m)
        if flip_x:
            directions[i] = np.pi - directions[i]
        if flip_y:
            directions[i] = -directions[i]
        directions[i] %= 2.0 * np.pi
        pos[i, 0], pos[i, 1] = x, y
    return replace(ms, positions=pos, directions=directions)


def step_random_waypoint(ms: MobilityState, dt: float = 1.0) -> MobilityState:
    """Advance toward each node's waypoint at a freshly drawn speed.

    A node arriving within one step snaps onto the waypoint and draws a new
    uniform target for the next step.
    """
    k = ms.positions.shape[0]
    speeds = ms.rng.uniform(0.0, ms.speed_max, size=k)
    pos = ms.positions.copy()
    waypoints = ms.waypoints.copy()
    for i in range(k):
        delta = waypoints[i, :2] - pos[i, :2]
        dist = float(np.sqrt((delta ** 2).sum()))
        step = speeds[i] * dt
        if dist <= step:
            pos[i, :2] = waypoints[i, :2]
            waypoints[i, :2] = ms.rng.uniform(0.0, ms.area_m, size=2)
        else:
            pos[i, :2] += delta / dist * step
    return replace(ms, positions=pos, waypoints=waypoints)


def step(ms: MobilityState, dt: float = 1.0) -> MobilityState:
    if ms.model == "random_walk":
        return step_random_walk(ms, dt)
    return step_random_waypoint(ms, dt)


def choose_mobile_relays(n_relays: int, mobile_count: int, seed: int) -> np.ndarray:
    """Uniform mobile subset, fixed per topology seed; endpoints stay static."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    count = min(mobile_count, n_relays)
    return np.sort(rng.choice(n_relays, size=count, replace=False))


def simulate_positions(topology_positions: np.ndarray, ms: MobilityState,
                       horizon_s: int, dt: float = 1.0) -> np.ndarray:
    """Full-network position series, shape (horizon+1, N, 3); t = 0 is initial."""
    series = np.empty((horizon_s + 1, *topology_positions.shape))
    all_pos = topology_positions.copy()
    all_pos[ms.node_ids] = ms.positions
    series[0] = all_pos
    for t in range(1, horizon_s + 1):
        ms = step(ms, dt)
        all_pos = all_pos.copy()
        all_pos[ms.node_ids] = ms.positions
        series[t] = all_pos
    return series


def run_mobility_experiment(state: NetworkState, policies, position_series: np.ndarray,
                            decision_interval_s: int, strategy: str = "distance",
                            e_nei: int = 10, hop_cap: int | None = None) -> np.ndarray:
    """Per-second sum rate while nodes move.

    Routes are established at t = 0 and re-established whenever t is a
    multiple of the decision interval; in between they stay frozen and only
    the rates are recomputed at the moved positions. Returns the sum-rate
    series indexed by second, length = len(position_series).
    """
    horizon = position_series.shape[0] - 1
    series = np.zeros(horizon + 1)

    def decide() -> None:
        state.reset_routes()
        establish_all(state, policies, strategy, e_nei, hop_cap)

    state.set_positions(position_series[0])
    decide()
    series[0] = state.sum_rate()
    for t in range(1, horizon + 1):
        state.set_positions(position_series[t])
        if decision_interval_s > 0 and t % decision_interval_s == 0:
            decide()
        series[t] = state.sum_rate()
    return series
