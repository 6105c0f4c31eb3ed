"""Multi-hop, multi-flow routing for heterogeneous wireless networks.

Simulates networks whose nodes carry several radio technologies split into
orthogonal subbands, scores routes by their interference-aware bottleneck
rate, and trains a shared dueling Q-network that picks the next hop and
communication resource jointly. Benchmark schemes, mobility models, and a
seeded experiment harness round out the package.
"""

__version__ = "0.1.0"

from .channel import (CommResource, GainGrid, LogDistanceModel, ResourceSet,
                      TechPathLoss, gain, gain_power, load_gain_grid,
                      write_gain_grid)
from .netmodel import (LinkMeasurement, NetworkState, Route, Topology,
                       random_topology)
from .selection import NeighborSet, select
from .router import brute_force_optimal, build_route, establish_all, reestablish
from .qnet import Adam, QNet, load_checkpoint, q_forward, save_checkpoint
from .dqn import DQNPolicy, FeatureNorm, ReplayBuffer, act, epsilon, featurize
from .config import ScenarioConfig, load_scenario, make_state, save_scenario

__all__ = [
    "Adam", "CommResource", "DQNPolicy", "FeatureNorm", "GainGrid",
    "LinkMeasurement", "LogDistanceModel", "NeighborSet", "NetworkState",
    "QNet", "ReplayBuffer", "ResourceSet", "Route", "ScenarioConfig",
    "TechPathLoss", "Topology", "act", "brute_force_optimal", "build_route",
    "epsilon", "establish_all", "featurize", "gain", "gain_power",
    "load_checkpoint", "load_gain_grid", "load_scenario", "make_state",
    "q_forward", "random_topology", "reestablish", "save_checkpoint",
    "save_scenario", "select", "write_gain_grid",
]
