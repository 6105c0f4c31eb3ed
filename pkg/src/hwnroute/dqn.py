"""Learning stack for the routing agent.

The frontier node scores each (candidate, resource) pair with one shared
dueling Q-network: candidates are featurized per resource into a flat vector
of five features per slot (distance to destination, angle off the
destination direction, channel gain, interference at the candidate, and link
rate), the network is evaluated once per resource, and the highest Q-value
wins. Completed routes are stored hop by hop in a replay buffer with the
route's final bottleneck rate as the regression target for every hop; there
is no bootstrapped future term and no target network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netmodel import (DeadEndError, NetworkState, allowed_action_mask,
                       decision_rates, interference_map)
from .qnet import QNet
from .selection import NeighborSet

FEATURES_PER_NEIGHBOR = 5


@dataclass(frozen=True)
class FeatureNorm:
    """Affine feature scaling applied identically at train and test time.

    Distances scale by the area diagonal, angles by pi, channel gain and
    interference map from dB ranges to roughly [-1, 1], rates divide by a
    fixed rate scale. Rewards are trained in units of reward_scale bits/s.
    """

    area_diag_m: float
    gain_db_lo: float = -140.0
    gain_db_hi: float = -20.0
    interf_dbm_lo: float = -170.0
    interf_dbm_hi: float = -30.0
    rate_scale: float = 1e7
    reward_scale: float = 1e6

    @classmethod
    def for_area(cls, area_m: float, **kwargs) -> "FeatureNorm":
        return cls(area_diag_m=float(np.sqrt(2.0) * area_m), **kwargs)


@dataclass
class StateVector:
    """Flat per-resource feature vector over the candidate slots.

    features holds the normalized values the network consumes, raw the
    physical values (m, rad, amplitude, W, bits/s). Slots beyond the real
    candidates are zero-padded and masked out.
    """

    features: np.ndarray          # (5 * n_slots,) normalized
    raw: np.ndarray               # (5 * n_slots,)
    mask: np.ndarray              # (n_slots,) bool, True = real candidate
    neighbor_ids: tuple[int, ...]
    resource_index: int
    norm: FeatureNorm

    @property
    def n_slots(self) -> int:
        return self.mask.shape[0]


def featurize(state: NetworkState, frontier: int, flow: int,
              neighbor_set: NeighborSet, resource_index: int,
              norm: FeatureNorm) -> StateVector:
    """Feature vector for one resource over the neighbor set's slots."""
    block = _feature_block(state, flow, frontier, neighbor_set, norm)
    return _slice_state_vector(block, resource_index)


@dataclass
class _FeatureBlock:
    raw: np.ndarray        # (n_slots, R, 5)
    features: np.ndarray   # (n_slots, R, 5)
    mask: np.ndarray       # (n_slots,)
    neighbor_ids: tuple[int, ...]
    norm: FeatureNorm


def _feature_block(state: NetworkState, flow: int, frontier: int,
                   neighbor_set: NeighborSet, norm: FeatureNorm,
                   rates: np.ndarray | None = None,
                   interf: np.ndarray | None = None) -> _FeatureBlock:
    if not neighbor_set.neighbors:
        raise DeadEndError(f"flow {flow}: empty neighbor set at node {frontier}")
    if interf is None:
        interf = interference_map(state)
    if rates is None:
        rates = decision_rates(state, interf)
    topo = state.topology
    pos = topo.positions()
    dest = topo.dest_id(flow)
    n_slots = neighbor_set.capacity
    n_res = len(state.resource_set)
    ids = list(neighbor_set.neighbors)[:n_slots]
    k = len(ids)

    raw = np.zeros((n_slots, n_res, 5))
    feats = np.zeros((n_slots, n_res, 5))
    mask = np.zeros(n_slots, dtype=bool)
    mask[:k] = True

    idx = np.asarray(ids)
    d_dest = np.sqrt(((pos[idx] - pos[dest]) ** 2).sum(axis=1))
    to_dest = pos[dest] - pos[frontier]
    to_nei = pos[idx] - pos[frontier]
    cross = np.cross(to_nei, to_dest[None, :])
    angles = np.arctan2(np.sqrt((cross ** 2).sum(axis=1)), to_nei @ to_dest)
    amp = np.sqrt(state.gain2[frontier, idx, :])      # (k, R)
    interf_k = interf[idx, :]                         # (k, R)
    rate_k = rates[frontier, idx, :]                  # (k, R)

    raw[:k, :, 0] = d_dest[:, None]
    raw[:k, :, 1] = angles[:, None]
    raw[:k, :, 2] = amp
    raw[:k, :, 3] = interf_k
    raw[:k, :, 4] = rate_k

    feats[:k, :, 0] = d_dest[:, None] / norm.area_diag_m
    feats[:k, :, 1] = angles[:, None] / np.pi
    gain_pow = amp ** 2
    for col, (values, lo, hi) in enumerate(
            ((gain_pow, norm.gain_db_lo, norm.gain_db_hi),
             (interf_k / 1e-3, norm.interf_dbm_lo, norm.interf_dbm_hi))):
        with np.errstate(divide="ignore"):
            db = 10.0 * np.log10(values)
        scaled = np.clip(2.0 * (db - lo) / (hi - lo) - 1.0, -1.0, 1.0)
        feats[:k, :, 2 + col] = np.where(values > 0.0, scaled, -1.0)
    feats[:k, :, 4] = rate_k / norm.rate_scale

    return _FeatureBlock(raw, feats, mask, tuple(ids), norm)


def _slice_state_vector(block: _FeatureBlock, resource_index: int) -> StateVector:
    return StateVector(
        features=block.features[:, resource_index, :].reshape(-1).copy(),
        raw=block.raw[:, resource_index, :].reshape(-1).copy(),
        mask=block.mask.copy(),
        neighbor_ids=block.neighbor_ids,
        resource_index=resource_index,
        norm=block.norm,
    )


def epsilon(t: int, total_episodes: int) -> float:
    """Linear exploration schedule: 1 - t/T, floored at zero."""
    return max(0.0, 1.0 - t / total_episodes)


@dataclass
class ActResult:
    node: int
    resource_index: int
    slot: int
    state_vector: StateVector


def act(net: QNet, state: NetworkState, flow: int, frontier: int,
        neighbor_set: NeighborSet, eps: float, rng: np.random.Generator,
        norm: FeatureNorm) -> ActResult:
    """Pick the next (node, resource) by the epsilon-greedy policy.

    With probability eps the action is uniform over all feasible
    (resource, candidate) pairs; otherwise the pair with the highest Q-value
    wins, ties resolved by (resource index, node id). Padded slots and pairs
    blocked by the feasibility rules are never selectable.
    """
    block = _feature_block(state, flow, frontier, neighbor_set, norm)
    n_res = len(state.resource_set)
    action_mask = allowed_action_mask(state, flow, frontier)
    valid: list[tuple[int, int]] = []    # (resource, slot)
    for slot, node in enumerate(block.neighbor_ids):
        for r in range(n_res):
            if action_mask[node, r]:
                valid.append((r, slot))
    if not valid:
        raise DeadEndError(f"flow {flow}: every candidate action is infeasible "
                           f"at node {frontier}")

    if eps > 0.0 and rng.random() < eps:
        r, slot = valid[rng.integers(len(valid))]
    else:
        x = block.features.transpose(1, 0, 2).reshape(n_res, -1)  # (R, 5*slots)
        q = net.forward(x)                                        # (R, n_slots)
        best = None
        best_key = None
        for r, slot in valid:
            key = (-q[r, slot], r, block.neighbor_ids[slot])
            if best_key is None or key < best_key:
                best_key = key
                best = (r, slot)
        r, slot = best
    return ActResult(block.neighbor_ids[slot], r, slot,
                     _slice_state_vector(block, r))


# ---------------------------------------------------------------------------
# Replay and training
# ---------------------------------------------------------------------------

@dataclass
class Experience:
    features: np.ndarray
    action: int
    reward_bps: float
    resource_index: int
    episode: int


class ReplayBuffer:
    """Fixed-capacity ring of experiences with uniform batch sampling."""

    def __init__(self, capacity: int, feature_dim: int):
        self.capacity = capacity
        self.features = np.zeros((capacity, feature_dim))
        self.actions = np.zeros(capacity, dtype=int)
        self.rewards = np.zeros(capacity)
        self.resources = np.zeros(capacity, dtype=int)
        self.episodes = np.zeros(capacity, dtype=int)
        self.size = 0
        self._next = 0

    def __len__(self) -> int:
        return self.size

    def add(self, exp: Experience) -> None:
        i = self._next
        self.features[i] = exp.features
        self.actions[i] = exp.action
        self.rewards[i] = exp.reward_bps
        self.resources[i] = exp.resource_index
        self.episodes[i] = exp.episode
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform sample without replacement within the batch."""
        if self.size < batch_size:
            raise ValueError(f"buffer holds {self.size} experiences, "
                             f"batch needs {batch_size}")
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return self.features[idx], self.actions[idx], self.rewards[idx]

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {"buf_features": self.features, "buf_actions": self.actions,
                "buf_rewards": self.rewards, "buf_resources": self.resources,
                "buf_episodes": self.episodes,
                "buf_meta": np.array([self.size, self._next])}

    def load_state_arrays(self, arrays) -> None:
        self.features[:] = arrays["buf_features"]
        self.actions[:] = arrays["buf_actions"]
        self.rewards[:] = arrays["buf_rewards"]
        self.resources[:] = arrays["buf_resources"]
        self.episodes[:] = arrays["buf_episodes"]
        self.size, self._next = (int(v) for v in arrays["buf_meta"])


def record_route(buffer: ReplayBuffer, trajectory: list[tuple[StateVector, int]],
                 route_or_none, state: NetworkState, episode: int = 0) -> int:
    """Store one experience per decision of a finished episode.

    Every hop of a completed route receives the same reward, the route's
    bottleneck rate recomputed under the full final interference; an aborted
    route stores reward zero for its partial trajectory.
    """
    if route_or_none is not None and route_or_none.is_complete(state.topology):
        reward = state.route_rate(route_or_none)
    else:
        reward = 0.0
    for sv, slot in trajectory:
        buffer.add(Experience(sv.features, slot, reward, sv.resource_index, episode))
    return len(trajectory)


def train_step(net: QNet, optimizer, buffer: ReplayBuffer, batch_size: int,
               rng: np.random.Generator, reward_scale: float = 1e6) -> float:
    """One regression step: MSE between Q(s)[a] and the stored reward.

    Gradients flow only through each sample's taken action. Returns the
    batch loss (rewards trained in units of reward_scale bits/s).
    """
    feats, actions, rewards = buffer.sample(batch_size, rng)
    targets = rewards / reward_scale
    q = net.forward(feats)
    picked = q[np.arange(batch_size), actions]
    err = picked - targets
    loss = float((err ** 2).mean())
    dq = np.zeros_like(q)
    dq[np.arange(batch_size), actions] = 2.0 * err / batch_size
    net.zero_grad()
    net.backward(dq)
    optimizer.step()
    return loss


class DQNPolicy:
    """Route-construction policy backed by a shared Q-network.

    Records the (state vector, action slot) trajectory of the flow it routes
    so the caller can push it into a replay buffer with the final reward.
    """

    uses_neighbor_set = True

    def __init__(self, net: QNet, norm: FeatureNorm, eps: float = 0.0,
                 rng: np.random.Generator | None = None):
        self.net = net
        self.norm = norm
        self.eps = eps
        self.rng = rng if rng is not None else np.random.Generator(np.random.PCG64(0))
        self.trajectory: list[tuple[StateVector, int]] = []

    def begin_flow(self, flow: int) -> None:
        self.trajectory = []

    def step(self, state: NetworkState, flow: int,
             neighbor_set: NeighborSet) -> tuple[int, int]:
        result = act(self.net, state, flow, neighbor_set.frontier, neighbor_set,
                     self.eps, self.rng, self.norm)
        self.trajectory.append((result.state_vector, result.slot))
        return result.node, result.resource_index
