"""Network state and radio math.

Holds node placement, flows, committed routes, and everything derived from
them: received signal power, interference split into inter-flow and
intra-flow parts, SINR, per-link Shannon rate, end-to-end bottleneck rate,
sum rate, and the feasibility rules every route must satisfy (no revisited
nodes, consecutive hops on different resources, and pairwise-distinct
adjacent resources at relays shared between flows).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelError, GainGrid, LogDistanceModel, ResourceSet, gain_power_table


class DeadEndError(RuntimeError):
    """No feasible next hop exists at the current frontier."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * np.log10(watts) + 30.0


def angle_between(origin, toward_a, toward_b) -> float:
    """Angle in [0, pi] at origin between the directions to two points.

    Computed as atan2(|cross|, dot), which is exact for coincident or
    colinear targets, unlike the arccos form.
    """
    va = np.asarray(toward_a, dtype=float) - np.asarray(origin, dtype=float)
    vb = np.asarray(toward_b, dtype=float) - np.asarray(origin, dtype=float)
    if not va.any() or not vb.any():
        return 0.0
    cross = np.cross(va, vb)
    return float(np.arctan2(np.sqrt((cross ** 2).sum()), np.dot(va, vb)))


@dataclass(frozen=True)
class Topology:
    """Node placement: E relay nodes plus one (source, destination) pair per flow.

    Node ids are dense integers: relays are 0..E-1, flow f's source is
    E + 2f and its destination E + 2f + 1. Endpoints are dedicated to their
    own flow and never relay for others.
    """

    relay_positions: np.ndarray    # (E, 3) meters
    flow_endpoints: np.ndarray     # (F, 2, 3) meters, [source, destination]
    area_m: float
    seed: int = 0

    def __post_init__(self):
        rel = np.asarray(self.relay_positions, dtype=float).reshape(-1, 3)
        ends = np.asarray(self.flow_endpoints, dtype=float).reshape(-1, 2, 3)
        object.__setattr__(self, "relay_positions", rel)
        object.__setattr__(self, "flow_endpoints", ends)
        pos = self.positions()
        if np.any(pos[:, :2] < 0.0) or np.any(pos[:, :2] > self.area_m):
            raise ValueError("node position outside area bounds")
        uniq = {tuple(p) for p in pos}
        if len(uniq) != len(pos):
            raise ValueError("coincident node positions")

    @property
    def n_relays(self) -> int:
        return self.relay_positions.shape[0]

    @property
    def n_flows(self) -> int:
        return self.flow_endpoints.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.n_relays + 2 * self.n_flows

    def positions(self) -> np.ndarray:
        return np.concatenate([self.relay_positions,
                               self.flow_endpoints.reshape(-1, 3)], axis=0)

    def source_id(self, flow: int) -> int:
        return self.n_relays + 2 * flow

    def dest_id(self, flow: int) -> int:
        return self.n_relays + 2 * flow + 1

    def is_relay(self, node: int) -> bool:
        return 0 <= node < self.n_relays


def random_topology(n_relays: int, n_flows: int, area_m: float, seed: int) -> Topology:
    """Uniform placement of relays and flow endpoints in the square area (z = 0)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    n = n_relays + 2 * n_flows
    xy = rng.uniform(0.0, area_m, size=(n, 2))
    pos = np.concatenate([xy, np.zeros((n, 1))], axis=1)
    relays = pos[:n_relays]
    ends = pos[n_relays:].reshape(n_flows, 2, 3)
    return Topology(relays, ends, area_m, seed=seed)


@dataclass
class Route:
    """Ordered node sequence for one flow plus the resource used on each hop."""

    flow_id: int
    nodes: list[int]
    hop_resources: list[int]

    @property
    def n_hops(self) -> int:
        return len(self.hop_resources)

    def hops(self):
        """Yield (tx, rx, resource_index) per committed hop."""
        for i, r in enumerate(self.hop_resources):
            yield self.nodes[i], self.nodes[i + 1], r

    @property
    def head(self) -> int:
        return self.nodes[-1]

    @property
    def inbound_resource(self) -> int | None:
        return self.hop_resources[-1] if self.hop_resources else None

    def is_complete(self, topology: Topology) -> bool:
        return self.head == topology.dest_id(self.flow_id)


@dataclass
class LinkMeasurement:
    tx: int
    rx: int
    resource_index: int
    signal_w: float
    ifi_w: float
    ihi_w: float
    noise_w: float
    bandwidth_hz: float

    @property
    def sinr(self) -> float:
        return self.signal_w / (self.ifi_w + self.ihi_w + self.noise_w)

    @property
    def rate_bps(self) -> float:
        return float(self.bandwidth_hz * np.log2(1.0 + self.sinr))


@dataclass
class Violation:
    kind: str       # "cycle" | "half-duplex" | "shared-relay resource clash"
    flow: int
    node: int
    detail: str


class NetworkState:
    """Mutable container for one network instance.

    Radio math is pure over the current contents; route construction mutates
    routes single-threaded. Gains are cached in a dense |h|^2 table that is
    rebuilt whenever positions change.
    """

    def __init__(self, topology: Topology, resource_set: ResourceSet,
                 gain2: np.ndarray, tx_power_w: float,
                 noise_mode: str, noise_value: float):
        if noise_mode not in ("density", "total"):
            raise ValueError(f"unknown noise mode {noise_mode!r}")
        self.topology = topology
        self.resource_set = resource_set
        self.gain2 = gain2
        self.tx_power_w = tx_power_w
        self.noise_mode = noise_mode       # "density": noise_value is W/Hz
        self.noise_value = noise_value     # "total": noise_value is W
        self.routes: list[Route | None] = [None] * topology.n_flows
        self.failed: set[int] = set()
        self._bandwidths = resource_set.bandwidths_hz
        self._noise_w = self._noise_per_resource()

    def _noise_per_resource(self) -> np.ndarray:
        if self.noise_mode == "density":
            return self._bandwidths * self.noise_value
        return np.full(len(self.resource_set), self.noise_value)

    # -- channel / positions ------------------------------------------------

    @classmethod
    def from_pathloss(cls, topology: Topology, resource_set: ResourceSet,
                      model: LogDistanceModel, tx_power_dbm: float,
                      noise_mode: str, noise_dbm: float,
                      channel_seed: int = 0) -> "NetworkState":
        gain2 = gain_power_table(model, topology.positions(), resource_set,
                                 seed=channel_seed)
        state = cls(topology, resource_set, gain2,
                    dbm_to_watts(tx_power_dbm), noise_mode,
                    cls._noise_value_from_dbm(noise_mode, noise_dbm))
        state._model = model
        state._channel_seed = channel_seed
        return state

    @classmethod
    def from_grid(cls, topology: Topology, resource_set: ResourceSet,
                  grid: GainGrid, tx_power_dbm: float,
                  noise_mode: str, noise_dbm: float) -> "NetworkState":
        if grid.n_nodes != topology.n_nodes:
            raise ChannelError(f"gain grid has {grid.n_nodes} nodes, "
                               f"topology has {topology.n_nodes}")
        if grid.n_resources != len(resource_set):
            raise ChannelError(f"gain grid has {grid.n_resources} resources, "
                               f"resource set has {len(resource_set)}")
        state = cls(topology, resource_set, grid.power_table(),
                    dbm_to_watts(tx_power_dbm), noise_mode,
                    cls._noise_value_from_dbm(noise_mode, noise_dbm))
        state._model = None
        state._channel_seed = 0
        return state

    @staticmethod
    def _noise_value_from_dbm(noise_mode: str, noise_dbm: float) -> float:
        # In density mode the configured figure is read as dBm per MHz.
        watts = dbm_to_watts(noise_dbm)
        return watts / 1e6 if noise_mode == "density" else watts

    def clone_empty(self) -> "NetworkState":
        """Fresh state over the same topology and gain table, no routes."""
        clone = NetworkState(self.topology, self.resource_set, self.gain2,
                             self.tx_power_w, self.noise_mode, self.noise_value)
        clone._model = getattr(self, "_model", None)
        clone._channel_seed = getattr(self, "_channel_seed", 0)
        return clone

    def set_positions(self, positions: np.ndarray) -> None:
        """Move nodes and rebuild the gain cache; committed routes are kept."""
        if getattr(self, "_model", None) is None:
            raise ChannelError("cannot move nodes: gains come from a fixed grid")
        topo = self.topology
        n_rel = topo.n_relays
        pos = np.asarray(positions, dtype=float)
        new_topo = Topology(pos[:n_rel], pos[n_rel:].reshape(topo.n_flows, 2, 3),
                            topo.area_m, seed=topo.seed)
        self.topology = new_topo
        self.gain2 = gain_power_table(self._model, new_topo.positions(),
                                      self.resource_set, seed=self._channel_seed)

    # -- route bookkeeping ---------------------------------------------------

    def start_route(self, flow: int) -> Route:
        route = Route(flow, [self.topology.source_id(flow)], [])
        self.routes[flow] = route
        self.failed.discard(flow)
        return route

    def commit_hop(self, flow: int, next_node: int, resource_index: int) -> None:
        route = self.routes[flow]
        route.nodes.append(next_node)
        route.hop_resources.append(resource_index)

    def teardown(self, flow: int) -> None:
        self.routes[flow] = None
        self.failed.discard(flow)

    def reset_routes(self) -> None:
        self.routes = [None] * self.topology.n_flows
        self.failed = set()

    def mark_failed(self, flow: int) -> None:
        self.failed.add(flow)

    def committed_hops(self):
        """Yield (flow, tx, rx, resource_index) over every committed hop."""
        for route in self.routes:
            if route is None:
                continue
            for tx, rx, r in route.hops():
                yield route.flow_id, tx, rx, r

    def adjacent_resources(self, node: int, exclude_flow: int | None = None) -> set[int]:
        """Resources of committed hops incident to a node, optionally ignoring one flow."""
        out: set[int] = set()
        for flow, tx, rx, r in self.committed_hops():
            if flow == exclude_flow:
                continue
            if tx == node or rx == node:
                out.add(r)
        return out

    def allowed_resources(self, flow: int, frontier: int, candidate: int) -> list[int]:
        """Resource indices usable for the hop frontier -> candidate right now.

        Excludes the frontier's inbound resource (half-duplex) and any
        resource already adjacent to either endpoint through another flow
        (shared-relay distinctness).
        """
        blocked = self.adjacent_resources(frontier, exclude_flow=flow)
        blocked |= self.adjacent_resources(candidate, exclude_flow=flow)
        route = self.routes[flow]
        if route is not None and route.inbound_resource is not None:
            blocked.add(route.inbound_resource)
        return [r for r in range(len(self.resource_set)) if r not in blocked]

    # -- radio math ----------------------------------------------------------

    def noise_w(self, resource_index: int) -> float:
        return float(self._noise_w[resource_index])

    def _check_ids(self, tx: int, rx: int, resource_index: int) -> None:
        n = self.topology.n_nodes
        if not (0 <= tx < n) or not (0 <= rx < n):
            raise ValueError(f"unknown node id in ({tx}, {rx})")
        if not (0 <= resource_index < len(self.resource_set)):
            raise ValueError(f"unknown resource index {resource_index}")

    def measure(self, tx: int, rx: int, resource_index: int, flow: int) -> LinkMeasurement:
        """Signal, interference, and noise for the hop tx -> rx on a resource.

        Interference sums every committed transmission on the same resource:
        other flows contribute inter-flow interference, other hops of the
        same flow contribute intra-flow interference. The hop's own committed
        transmission (same flow, same transmitter) is excluded so committed
        and candidate hops measure identically; a transmission originating at
        the receiver itself is excluded as well (a node cannot transmit and
        receive on one resource, and such assignments are rejected upstream).
        """
        if tx == rx:
            raise ValueError("transmitter and receiver coincide")
        self._check_ids(tx, rx, resource_index)
        p = self.tx_power_w
        signal = p * self.gain2[tx, rx, resource_index]
        ifi = 0.0
        ihi = 0.0
        for q, ktx, _krx, r in self.committed_hops():
            if r != resource_index or ktx == rx:
                continue
            if q == flow:
                if ktx == tx:
                    continue
                ihi += p * self.gain2[ktx, rx, resource_index]
            else:
                ifi += p * self.gain2[ktx, rx, resource_index]
        return LinkMeasurement(tx, rx, resource_index, signal, ifi, ihi,
                               self.noise_w(resource_index),
                               float(self._bandwidths[resource_index]))

    def sinr(self, tx: int, rx: int, resource_index: int, flow: int) -> float:
        return self.measure(tx, rx, resource_index, flow).sinr

    def link_rate(self, tx: int, rx: int, resource_index: int, flow: int) -> float:
        """Shannon rate of the hop in bits/s: bandwidth * log2(1 + SINR)."""
        return self.measure(tx, rx, resource_index, flow).rate_bps

    def route_rate(self, route: Route) -> float:
        """End-to-end rate: the minimum hop rate under full network interference."""
        if not route.is_complete(self.topology):
            raise ValueError(f"flow {route.flow_id}: route incomplete")
        return min(self.link_rate(tx, rx, r, route.flow_id)
                   for tx, rx, r in route.hops())

    def flow_rate(self, flow: int) -> float:
        """Achieved rate of a flow; failed flows score zero."""
        if flow in self.failed:
            return 0.0
        route = self.routes[flow]
        if route is None or not route.is_complete(self.topology):
            raise ValueError(f"flow {flow} incomplete")
        return self.route_rate(route)

    def sum_rate(self) -> float:
        """Total rate across flows; every flow must be either routed or failed."""
        return sum(self.flow_rate(f) for f in range(self.topology.n_flows))

    # -- constraint validation -------------------------------------------------

    def validate(self) -> list[Violation]:
        """Check every committed route against the feasibility rules.

        Returns one Violation per breach: a node revisited within a route, a
        node transmitting and receiving on one resource (equal consecutive
        hop resources), or clashing adjacent resources at a relay shared by
        several flows. An empty list means the state is feasible.
        """
        violations: list[Violation] = []
        adjacency: dict[int, list[tuple[int, int]]] = {}
        for route in self.routes:
            if route is None:
                continue
            f = route.flow_id
            seen: set[int] = set()
            for node in route.nodes:
                if node in seen:
                    violations.append(Violation(
                        "cycle", f, node, f"flow {f} visits node {node} twice"))
                seen.add(node)
            for i in range(len(route.hop_resources) - 1):
                if route.hop_resources[i] == route.hop_resources[i + 1]:
                    violations.append(Violation(
                        "half-duplex", f, route.nodes[i + 1],
                        f"flow {f} transmits and receives on resource "
                        f"{route.hop_resources[i]} at node {route.nodes[i + 1]}"))
            for idx, node in enumerate(route.nodes):
                entry = adjacency.setdefault(node, [])
                if idx > 0:
                    entry.append((f, route.hop_resources[idx - 1]))
                if idx < len(route.hop_resources):
                    entry.append((f, route.hop_resources[idx]))
        for node, entries in adjacency.items():
            flows = {f for f, _ in entries}
            if len(flows) < 2:
                continue
            for a in range(len(entries)):
                for b in range(a + 1, len(entries)):
                    fa, ra = entries[a]
                    fb, rb = entries[b]
                    if ra == rb and fa != fb:
                        violations.append(Violation(
                            "shared-relay resource clash", fa, node,
                            f"node {node} serves flows {fa} and {fb} "
                            f"with resource {ra} on both"))
        return violations


# ---------------------------------------------------------------------------
# Decision-time kernels (vectorized over all nodes and resources)
# ---------------------------------------------------------------------------

def interference_map(state: NetworkState) -> np.ndarray:
    """Total committed interference power at every node on every resource.

    Shape (N, R): entry [v, r] sums transmit power times gain from every
    committed transmitter on resource r into v, excluding v itself (the gain
    table diagonal is zero).
    """
    n = state.topology.n_nodes
    n_res = len(state.resource_set)
    interf = np.zeros((n, n_res))
    for _flow, tx, _rx, r in state.committed_hops():
        interf[:, r] += state.tx_power_w * state.gain2[tx, :, r]
    return interf


def decision_rates(state: NetworkState, interf: np.ndarray | None = None) -> np.ndarray:
    """Candidate link rates (N, N, R) under currently committed interference.

    Used while choosing the next hop; final route rates are recomputed per
    hop with the full interference set via NetworkState.link_rate.
    """
    if interf is None:
        interf = interference_map(state)
    signal = state.tx_power_w * state.gain2
    denom = interf[None, :, :] + state._noise_w[None, None, :]
    sinr = signal / denom
    return state._bandwidths[None, None, :] * np.log2(1.0 + sinr)


def blocked_resource_mask(state: NetworkState, flow: int) -> np.ndarray:
    """Boolean (N, R) mask of resources unusable at each node for this flow.

    True where a node already has an adjacent committed hop of another flow
    on that resource.
    """
    n = state.topology.n_nodes
    mask = np.zeros((n, len(state.resource_set)), dtype=bool)
    for q, tx, rx, r in state.committed_hops():
        if q == flow:
            continue
        mask[tx, r] = True
        mask[rx, r] = True
    return mask


def allowed_action_mask(state: NetworkState, flow: int, frontier: int) -> np.ndarray:
    """Boolean (N, R) mask of feasible hops frontier -> node on each resource.

    Vectorized equivalent of NetworkState.allowed_resources over every
    candidate node at once; entry [k, r] is True when the hop would violate
    no feasibility rule right now.
    """
    blocked = blocked_resource_mask(state, flow)
    frontier_blocked = blocked[frontier].copy()
    route = state.routes[flow]
    if route is not None and route.inbound_resource is not None:
        frontier_blocked[route.inbound_resource] = True
    return ~(blocked | frontier_blocked[None, :])
