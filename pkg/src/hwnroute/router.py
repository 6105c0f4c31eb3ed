"""Route construction, multi-flow orchestration, and an exhaustive oracle.

Routes grow hop by hop: the frontier node's policy picks the next node and
resource from the current candidate set until the destination is reached, a
hop cap trips, or no feasible action remains. Flows are established
sequentially, each seeing the interference already committed, and can then
be re-established in descending rate order to rebalance interference. For
desk-scale instances a brute-force enumerator provides the true optimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .baselines import BASELINE_STEPS, FULL_GRAPH_SCHEMES
from .netmodel import DeadEndError, NetworkState, Route
from .selection import select


@dataclass
class RouteFailure:
    flow: int
    cause: str       # "dead-end" | "hop-cap"
    detail: str = ""


class BaselinePolicy:
    """Adapts one benchmark step function to the policy interface."""

    def __init__(self, name: str):
        if name not in BASELINE_STEPS:
            raise ValueError(f"unknown baseline {name!r}")
        self.name = name
        self.step_fn = BASELINE_STEPS[name]
        self.uses_neighbor_set = name not in FULL_GRAPH_SCHEMES

    def begin_flow(self, flow: int) -> None:
        pass

    def step(self, state: NetworkState, flow: int, neighbor_set) -> tuple[int, int]:
        if self.uses_neighbor_set:
            return self.step_fn(state, flow, neighbor_set)
        return self.step_fn(state, flow)


def default_hop_cap(state: NetworkState, factor: int = 2) -> int:
    return max(2, factor * state.topology.n_relays)


def build_route(state: NetworkState, flow: int, policy, strategy: str = "distance",
                e_nei: int = 10, hop_cap: int | None = None) -> Route | RouteFailure:
    """Construct one flow's route with the given policy.

    On success the committed route is returned and remains in the state; on
    failure the flow is marked failed (its partial hops are removed) and a
    RouteFailure describes the cause.
    """
    if hop_cap is None:
        hop_cap = default_hop_cap(state)
    topo = state.topology
    dest = topo.dest_id(flow)
    route = state.start_route(flow)
    policy.begin_flow(flow)
    while route.head != dest:
        if route.n_hops >= hop_cap:
            state.teardown(flow)
            state.mark_failed(flow)
            return RouteFailure(flow, "hop-cap",
                                f"no route within {hop_cap} hops")
        try:
            if policy.uses_neighbor_set:
                neighbor_set = select(strategy, state, route.head, flow, e_nei)
            else:
                neighbor_set = None
            node, resource = policy.step(state, flow, neighbor_set)
        except DeadEndError as exc:
            state.teardown(flow)
            state.mark_failed(flow)
            return RouteFailure(flow, "dead-end", str(exc))
        state.commit_hop(flow, node, resource)
    return route


def establish_all(state: NetworkState, policies, strategy: str = "distance",
                  e_nei: int = 10, hop_cap: int | None = None,
                  order=None) -> NetworkState:
    """Route every flow sequentially; later flows see earlier commitments."""
    flows = list(order) if order is not None else list(range(state.topology.n_flows))
    for flow in flows:
        policy = policies[flow] if isinstance(policies, (list, tuple)) else policies
        build_route(state, flow, policy, strategy, e_nei, hop_cap)
    return state


def reestablish(state: NetworkState, policies, strategy: str = "distance",
                e_nei: int = 10, hop_cap: int | None = None,
                rounds: int = 4) -> NetworkState:
    """Re-route flows one at a time in descending achieved-rate order.

    Per round, each flow is torn down and rebuilt under the interference of
    the remaining flows; failed flows score zero and are re-routed last,
    giving them the cleanest channels. rounds = 0 leaves the state untouched.
    """
    for _ in range(rounds):
        def current_rate(f: int) -> float:
            if f in state.failed or state.routes[f] is None:
                return 0.0
            if not state.routes[f].is_complete(state.topology):
                return 0.0
            return state.route_rate(state.routes[f])

        order = sorted(range(state.topology.n_flows),
                       key=lambda f: (-current_rate(f), f))
        for flow in order:
            policy = policies[flow] if isinstance(policies, (list, tuple)) else policies
            state.teardown(flow)
            build_route(state, flow, policy, strategy, e_nei, hop_cap)
    return state


# ---------------------------------------------------------------------------
# Brute-force optimum for desk-scale instances
# ---------------------------------------------------------------------------

class EnumerationCapError(RuntimeError):
    """Instance is too large for exhaustive enumeration."""


def _simple_paths(state: NetworkState, flow: int) -> list[list[int]]:
    topo = state.topology
    src, dst = topo.source_id(flow), topo.dest_id(flow)
    relays = list(range(topo.n_relays))
    paths: list[list[int]] = []

    def extend(path: list[int]) -> None:
        paths.append(path + [dst])
        for n in relays:
            if n not in path:
                extend(path + [n])

    extend([src])
    return paths


def _assignments(n_hops: int, n_res: int):
    """Every resource sequence with consecutive entries distinct."""
    def extend(prefix: list[int]):
        if len(prefix) == n_hops:
            yield tuple(prefix)
            return
        for r in range(n_res):
            if prefix and prefix[-1] == r:
                continue
            yield from extend(prefix + [r])
    yield from extend([])


def _count_assignments(n_hops: int, n_res: int) -> int:
    if n_hops == 0:
        return 1
    return n_res * (n_res - 1) ** (n_hops - 1)


def brute_force_optimal(state: NetworkState, max_relays: int = 6,
                        max_resources: int = 3, max_flows: int = 2,
                        combo_cap: int = 2_000_000):
    """Exhaustively maximize the total rate over routes and resource choices.

    Enumerates every combination of simple paths and per-hop resource
    sequences that satisfies the feasibility rules, scoring each under full
    mutual interference. Only meant for tiny instances; anything beyond the
    caps raises EnumerationCapError.

    Returns (best_routes, best_sum_rate_bps).
    """
    topo = state.topology
    n_res = len(state.resource_set)
    if topo.n_relays > max_relays:
        raise EnumerationCapError(f"{topo.n_relays} relays exceeds cap {max_relays}")
    if n_res > max_resources:
        raise EnumerationCapError(f"{n_res} resources exceeds cap {max_resources}")
    if topo.n_flows > max_flows:
        raise EnumerationCapError(f"{topo.n_flows} flows exceeds cap {max_flows}")

    per_flow_paths = [_simple_paths(state, f) for f in range(topo.n_flows)]
    combos = 1
    for paths in per_flow_paths:
        combos *= sum(_count_assignments(len(p) - 1, n_res) for p in paths)
    if combos > combo_cap:
        raise EnumerationCapError(f"{combos} combinations exceeds cap {combo_cap}")

    scratch = NetworkState(topo, state.resource_set, state.gain2,
                           state.tx_power_w, state.noise_mode, state.noise_value)

    def flow_options(flow: int):
        for path in per_flow_paths[flow]:
            for assignment in _assignments(len(path) - 1, n_res):
                yield Route(flow, path, list(assignment))

    best_sum = -1.0
    best_routes = None
    if topo.n_flows == 1:
        candidates = ((r,) for r in flow_options(0))
    else:
        candidates = product(*(list(flow_options(f)) for f in range(topo.n_flows)))
    for candidate in candidates:
        scratch.routes = list(candidate)
        scratch.failed = set()
        if scratch.validate():
            continue
        total = scratch.sum_rate()
        if total > best_sum:
            best_sum = total
            best_routes = [Route(r.flow_id, list(r.nodes), list(r.hop_resources))
                           for r in candidate]
    return best_routes, best_sum
