"""Scenario configuration: dataclasses, strict JSON (de)serialization, factories.

A scenario file fully determines an experiment: geometry, radio resources,
channel parameters, power and noise, candidate-selection strategy, routing
policy, training hyperparameters, mobility settings, and seeds. Parsing is
strict; unknown keys, bad enums, and non-physical values fail with the
offending field named.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import GainGrid, LogDistanceModel, ResourceSet, TechPathLoss, load_gain_grid
from .dqn import FeatureNorm
from .netmodel import NetworkState, Topology, random_topology
from .selection import STRATEGIES

POLICIES = ("dqn", "best_direction", "closest_to_destination", "least_interfered",
            "largest_rate", "destination_direct", "widest_path")
NOISE_MODES = ("density", "total")
MOBILITY_MODELS = ("random_walk", "random_waypoint")
SWEEP_AXES = ("subbands", "relay_count", "resource_count", "flow_count")


class ConfigError(ValueError):
    pass


@dataclass
class TechConfig:
    center_freq_hz: float
    subbands: int = 1
    pathloss_exponent: float = 3.5
    ref_loss_db: float | None = None
    shadowing_sigma_db: float = 0.0


@dataclass
class ChannelConfig:
    kind: str = "log_distance"           # "log_distance" | "grid"
    grid_path: str | None = None


@dataclass
class TrainConfig:
    episodes: int = 30_000
    batch_size: int = 64
    replay_capacity: int = 100_000
    learning_rate: float = 1e-4
    train_steps_per_episode: int = 1
    reward_scale: float = 1e6
    # Housed for completeness; the regression target uses neither.
    discount: float = 0.99
    td_learning_rate: float = 0.1


@dataclass
class MobilityConfig:
    model: str = "random_walk"
    mobile_count: int = 20
    speed_max_mps: float = 5.0
    horizon_s: int = 60
    decision_interval_s: int = 1


@dataclass
class NormConfig:
    gain_db_lo: float = -140.0
    gain_db_hi: float = -20.0
    interf_dbm_lo: float = -170.0
    interf_dbm_hi: float = -30.0
    rate_scale: float = 1e7


def _default_techs() -> list[TechConfig]:
    return [TechConfig(center_freq_hz=f * 1e6)
            for f in (40, 80, 200, 400, 800, 2000, 3000)]


@dataclass
class ScenarioConfig:
    area_m: float = 2000.0
    relay_count: int = 27
    flow_count: int = 2
    e_nei: int = 10
    techs: list[TechConfig] = field(default_factory=_default_techs)
    tx_power_dbm: float = 0.0
    noise_mode: str = "density"
    noise_dbm: float = -110.0
    neighbor_strategy: str = "rate"
    policy: str = "dqn"
    schemes: list[str] = field(default_factory=lambda: list(POLICIES))
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    norm: NormConfig = field(default_factory=NormConfig)
    seed: int = 1
    eval_topologies: int = 1000
    reestablish_rounds: int = 4
    mobility_reestablish_rounds: int = 0
    hop_cap_factor: int = 2
    positions: list | None = None     # explicit (E + 2F, 3) placement, grid mode

    def validate(self) -> None:
        def positive(name, value):
            if not value > 0:
                raise ConfigError(f"{name} must be positive, got {value!r}")

        positive("area_m", self.area_m)
        positive("flow_count", self.flow_count)
        positive("e_nei", self.e_nei)
        if self.relay_count < 0:
            raise ConfigError(f"relay_count must be >= 0, got {self.relay_count}")
        if not self.techs:
            raise ConfigError("at least one technology is required")
        for i, t in enumerate(self.techs):
            positive(f"techs[{i}].center_freq_hz", t.center_freq_hz)
            positive(f"techs[{i}].subbands", t.subbands)
            if t.shadowing_sigma_db < 0:
                raise ConfigError(f"techs[{i}].shadowing_sigma_db must be >= 0")
        if self.noise_mode not in NOISE_MODES:
            raise ConfigError(f"noise_mode must be one of {NOISE_MODES}, "
                              f"got {self.noise_mode!r}")
        if self.neighbor_strategy not in STRATEGIES:
            raise ConfigError(f"neighbor_strategy must be one of {STRATEGIES}, "
                              f"got {self.neighbor_strategy!r}")
        if self.policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        for s in self.schemes:
            if s not in POLICIES:
                raise ConfigError(f"schemes entry {s!r} is not one of {POLICIES}")
        if self.mobility.model not in MOBILITY_MODELS:
            raise ConfigError(f"mobility.model must be one of {MOBILITY_MODELS}, "
                              f"got {self.mobility.model!r}")
        if not 0.0 <= self.mobility.speed_max_mps <= 5.0:
            raise ConfigError("mobility.speed_max_mps must lie in [0, 5]")
        if self.channel.kind not in ("log_distance", "grid"):
            raise ConfigError(f"channel.kind must be 'log_distance' or 'grid', "
                              f"got {self.channel.kind!r}")
        if self.channel.kind == "grid":
            if self.channel.grid_path is None:
                raise ConfigError("channel.kind 'grid' requires channel.grid_path")
            if self.positions is None:
                raise ConfigError("channel.kind 'grid' requires explicit positions")
        positive("train.episodes", self.train.episodes)
        positive("train.batch_size", self.train.batch_size)
        positive("train.replay_capacity", self.train.replay_capacity)
        positive("train.learning_rate", self.train.learning_rate)
        positive("train.reward_scale", self.train.reward_scale)
        positive("norm.rate_scale", self.norm.rate_scale)
        if self.reestablish_rounds < 0 or self.mobility_reestablish_rounds < 0:
            raise ConfigError("re-establishment rounds must be >= 0")
        positive("hop_cap_factor", self.hop_cap_factor)


# ---------------------------------------------------------------------------
# Strict dict / JSON round trip
# ---------------------------------------------------------------------------

def _from_dict(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {sorted(unknown)!r}")
    kwargs = {}
    for name, value in data.items():
        sub = f"{path}.{name}"
        if name == "techs":
            if not isinstance(value, list):
                raise ConfigError(f"{sub}: expected a list of technologies")
            kwargs[name] = [_from_dict(TechConfig, v, f"{sub}[{i}]")
                            for i, v in enumerate(value)]
        elif name == "channel":
            kwargs[name] = _from_dict(ChannelConfig, value, sub)
        elif name == "train":
            kwargs[name] = _from_dict(TrainConfig, value, sub)
        elif name == "mobility":
            kwargs[name] = _from_dict(MobilityConfig, value, sub)
        elif name == "norm":
            kwargs[name] = _from_dict(NormConfig, value, sub)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def scenario_from_dict(data: dict) -> ScenarioConfig:
    cfg = _from_dict(ScenarioConfig, data, "scenario")
    cfg.validate()
    return cfg


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    return dataclasses.asdict(cfg)


def load_scenario(path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return scenario_from_dict(data)


def save_scenario(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(cfg), indent=2) + "\n")


# ---------------------------------------------------------------------------
# Factories
# ---------------------------------------------------------------------------

def make_resource_set(cfg: ScenarioConfig) -> ResourceSet:
    return ResourceSet.from_tech_specs([(t.center_freq_hz, t.subbands)
                                        for t in cfg.techs])


def make_channel_model(cfg: ScenarioConfig) -> LogDistanceModel:
    return LogDistanceModel(tuple(
        TechPathLoss(exponent=t.pathloss_exponent, ref_loss_db=t.ref_loss_db,
                     shadowing_sigma_db=t.shadowing_sigma_db)
        for t in cfg.techs))


def make_feature_norm(cfg: ScenarioConfig) -> FeatureNorm:
    return FeatureNorm.for_area(
        cfg.area_m, gain_db_lo=cfg.norm.gain_db_lo, gain_db_hi=cfg.norm.gain_db_hi,
        interf_dbm_lo=cfg.norm.interf_dbm_lo, interf_dbm_hi=cfg.norm.interf_dbm_hi,
        rate_scale=cfg.norm.rate_scale, reward_scale=cfg.train.reward_scale)


def topology_seed(cfg: ScenarioConfig, stream: int, index: int) -> int:
    """Deterministic per-purpose seed derived from the scenario seed."""
    ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(stream, index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# Seed stream ids.
STREAM_TRAIN_TOPO = 1
STREAM_TRAIN_EPS = 2
STREAM_TRAIN_SAMPLE = 3
STREAM_EVAL_TOPO = 4
STREAM_MOBILITY = 5


def make_topology(cfg: ScenarioConfig, seed: int) -> Topology:
    if cfg.positions is not None:
        pos = np.asarray(cfg.positions, dtype=float)
        expected = cfg.relay_count + 2 * cfg.flow_count
        if pos.shape != (expected, 3):
            raise ConfigError(f"positions must have shape ({expected}, 3), "
                              f"got {pos.shape}")
        return Topology(pos[:cfg.relay_count],
                        pos[cfg.relay_count:].reshape(cfg.flow_count, 2, 3),
                        cfg.area_m, seed=seed)
    return random_topology(cfg.relay_count, cfg.flow_count, cfg.area_m, seed)


def make_state(cfg: ScenarioConfig, seed: int,
               grid: GainGrid | None = None) -> NetworkState:
    topo = make_topology(cfg, seed)
    resources = make_resource_set(cfg)
    if cfg.channel.kind == "grid":
        if grid is None:
            grid = load_gain_grid(Path(cfg.channel.grid_path).read_bytes())
        return NetworkState.from_grid(topo, resources, grid, cfg.tx_power_dbm,
                                      cfg.noise_mode, cfg.noise_dbm)
    return NetworkState.from_pathloss(topo, resources, make_channel_model(cfg),
                                      cfg.tx_power_dbm, cfg.noise_mode,
                                      cfg.noise_dbm, channel_seed=seed)
