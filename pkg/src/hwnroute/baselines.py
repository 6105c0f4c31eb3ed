"""Benchmark routing schemes.

Greedy per-hop rules (best direction, closest to destination, least
interfered, largest rate), direct source-to-destination transmission, and a
widest-path scheme that replans a maximum-bottleneck route over the whole
relay graph at every hop. All schemes filter out hops that would violate the
feasibility rules before choosing, so every emitted route validates cleanly.

The greedy schemes deliver directly whenever the destination is a feasible
candidate action and apply their metric only among relays otherwise; without
that rule the interference- and rate-driven walks have nothing steering them
toward the destination and mostly die at the hop cap.
"""

from __future__ import annotations

import heapq

import numpy as np

from .netmodel import (DeadEndError, NetworkState, allowed_action_mask,
                       angle_between, blocked_resource_mask, decision_rates,
                       interference_map)
from .selection import NeighborSet, eligible_candidates


def _candidate_actions(state: NetworkState, flow: int,
                       neighbor_set: NeighborSet) -> dict[int, list[int]]:
    """Feasible resources per candidate node; empty candidates are dropped."""
    mask = allowed_action_mask(state, flow, neighbor_set.frontier)
    out = {}
    for n in neighbor_set.neighbors:
        allowed = [int(r) for r in np.nonzero(mask[n])[0]]
        if allowed:
            out[n] = allowed
    if not out:
        raise DeadEndError(f"flow {flow}: every candidate action is infeasible "
                           f"at node {neighbor_set.frontier}")
    return out


def _best_resource(state: NetworkState, flow: int, frontier: int, node: int,
                   allowed: list[int], rates: np.ndarray) -> int:
    # Highest current-interference rate; ties go to the lowest resource index.
    return min(allowed, key=lambda r: (-rates[frontier, node, r], r))


def _deliver_if_possible(state: NetworkState, flow: int, frontier: int,
                         actions: dict[int, list[int]],
                         rates: np.ndarray) -> tuple[int, int] | None:
    dest = state.topology.dest_id(flow)
    if dest in actions:
        return dest, _best_resource(state, flow, frontier, dest, actions[dest], rates)
    return None


def best_direction_step(state: NetworkState, flow: int,
                        neighbor_set: NeighborSet) -> tuple[int, int]:
    """Candidate with the smallest angle off the straight line to the destination."""
    actions = _candidate_actions(state, flow, neighbor_set)
    pos = state.topology.positions()
    frontier = neighbor_set.frontier
    dest = state.topology.dest_id(flow)
    rates = decision_rates(state)
    delivered = _deliver_if_possible(state, flow, frontier, actions, rates)
    if delivered is not None:
        return delivered
    node = min(actions, key=lambda n: (angle_between(pos[frontier], pos[dest], pos[n]), n))
    return node, _best_resource(state, flow, frontier, node, actions[node], rates)


def closest_to_destination_step(state: NetworkState, flow: int,
                                neighbor_set: NeighborSet) -> tuple[int, int]:
    """Candidate nearest to the destination."""
    actions = _candidate_actions(state, flow, neighbor_set)
    pos = state.topology.positions()
    frontier = neighbor_set.frontier
    dest = state.topology.dest_id(flow)
    rates = decision_rates(state)
    delivered = _deliver_if_possible(state, flow, frontier, actions, rates)
    if delivered is not None:
        return delivered
    node = min(actions,
               key=lambda n: (float(np.sqrt(((pos[n] - pos[dest]) ** 2).sum())), n))
    return node, _best_resource(state, flow, frontier, node, actions[node], rates)


def least_interfered_step(state: NetworkState, flow: int,
                          neighbor_set: NeighborSet) -> tuple[int, int]:
    """(candidate, resource) with the least interference power at the candidate."""
    actions = _candidate_actions(state, flow, neighbor_set)
    frontier = neighbor_set.frontier
    rates = decision_rates(state)
    delivered = _deliver_if_possible(state, flow, frontier, actions, rates)
    if delivered is not None:
        return delivered
    interf = interference_map(state)
    best = min(((n, r) for n, allowed in actions.items() for r in allowed),
               key=lambda nr: (interf[nr[0], nr[1]], nr[0], nr[1]))
    return best


def largest_rate_step(state: NetworkState, flow: int,
                      neighbor_set: NeighborSet) -> tuple[int, int]:
    """(candidate, resource) with the highest link rate from the frontier."""
    actions = _candidate_actions(state, flow, neighbor_set)
    rates = decision_rates(state)
    frontier = neighbor_set.frontier
    delivered = _deliver_if_possible(state, flow, frontier, actions, rates)
    if delivered is not None:
        return delivered
    best = min(((n, r) for n, allowed in actions.items() for r in allowed),
               key=lambda nr: (-rates[frontier, nr[0], nr[1]], nr[0], nr[1]))
    return best


def destination_direct_step(state: NetworkState, flow: int,
                            neighbor_set: NeighborSet | None = None) -> tuple[int, int]:
    """Single hop straight to the destination on its best-rate resource."""
    frontier = (neighbor_set.frontier if neighbor_set is not None
                else state.routes[flow].head)
    dest = state.topology.dest_id(flow)
    allowed = state.allowed_resources(flow, frontier, dest)
    if not allowed:
        raise DeadEndError(f"flow {flow}: no feasible resource toward the destination")
    rates = decision_rates(state)
    return dest, _best_resource(state, flow, frontier, dest, allowed, rates)


# ---------------------------------------------------------------------------
# Widest path
# ---------------------------------------------------------------------------

def widest_path(weights: np.ndarray, src: int, dst: int) -> list[int]:
    """Maximum-bottleneck path via a modified Dijkstra.

    weights is a dense (n, n) matrix; entries <= 0 mean no edge. Among equal
    widths the lower node id is settled first, which fixes tie-breaking.
    """
    n = weights.shape[0]
    width = np.full(n, -np.inf)
    width[src] = np.inf
    pred = np.full(n, -1, dtype=int)
    done = np.zeros(n, dtype=bool)
    heap: list[tuple[float, int]] = [(-np.inf, src)]
    while heap:
        negw, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == dst:
            break
        for v in range(n):
            if done[v] or weights[u, v] <= 0.0:
                continue
            w = min(width[u], weights[u, v])
            if w > width[v]:
                width[v] = w
                pred[v] = u
                heapq.heappush(heap, (-w, v))
    if not np.isfinite(width[dst]) or width[dst] <= 0.0:
        raise DeadEndError("disconnected: no path to the destination")
    path = [dst]
    while path[-1] != src:
        path.append(int(pred[path[-1]]))
    return path[::-1]


def widest_path_step(state: NetworkState, flow: int) -> tuple[int, int]:
    """First hop of the current widest route to the destination.

    The graph spans the frontier, every relay still usable by this flow, and
    the destination. Each edge is weighted by the best feasible resource rate
    under the interference committed so far; the caller re-invokes after each
    hop so the graph tracks newly committed transmissions.
    """
    topo = state.topology
    route = state.routes[flow]
    frontier = route.head
    dest = topo.dest_id(flow)
    nodes = [frontier] + [n for n in eligible_candidates(state, flow, frontier)
                          if n != dest] + [dest]
    rates = decision_rates(state)
    blocked = blocked_resource_mask(state, flow)
    if route.inbound_resource is not None:
        blocked = blocked.copy()
        blocked[frontier, route.inbound_resource] = True

    idx = np.asarray(nodes)
    sub_rates = rates[np.ix_(idx, idx)]                    # (k, k, R)
    usable = ~(blocked[idx][:, None, :] | blocked[idx][None, :, :])
    sub_rates = np.where(usable, sub_rates, 0.0)
    weights = sub_rates.max(axis=2)
    np.fill_diagonal(weights, 0.0)

    path = widest_path(weights, 0, len(nodes) - 1)
    next_node = nodes[path[1]]
    allowed = state.allowed_resources(flow, frontier, next_node)
    if not allowed:
        raise DeadEndError(f"flow {flow}: widest-path hop has no feasible resource")
    return next_node, _best_resource(state, flow, frontier, next_node, allowed, rates)


BASELINE_STEPS = {
    "best_direction": best_direction_step,
    "closest_to_destination": closest_to_destination_step,
    "least_interfered": least_interfered_step,
    "largest_rate": largest_rate_step,
    "destination_direct": destination_direct_step,
    "widest_path": widest_path_step,
}

# Schemes that plan over the full graph instead of a neighbor candidate set.
FULL_GRAPH_SCHEMES = ("destination_direct", "widest_path")
