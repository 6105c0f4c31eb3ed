"""Neighbor candidate selection at the frontier node.

Three strategies pick the candidate next hops a frontier node considers:
by distance, by average channel gain across all resources, or by average
achievable rate under current interference. The flow's own destination
competes for a slot under the same metric as every relay, so it enters the
candidate set as the route draws near; routes that never rank it high
enough run into the hop cap and count as failed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netmodel import (DeadEndError, NetworkState, allowed_action_mask,
                       decision_rates)

STRATEGIES = ("distance", "channel", "rate")


@dataclass(frozen=True)
class NeighborSet:
    frontier: int
    neighbors: tuple[int, ...]
    strategy: str
    capacity: int  # the configured candidate budget


def eligible_candidates(state: NetworkState, flow: int, frontier: int,
                        action_mask: np.ndarray | None = None) -> list[int]:
    """Nodes the flow may still hop to from the frontier.

    Relays not yet on this flow's route plus the flow's own destination;
    other flows' endpoints are never candidates. Nodes with no usable
    resource for the immediate hop (every resource blocked at the frontier
    or at the node by other flows' commitments) are dropped.
    """
    topo = state.topology
    route = state.routes[flow]
    used = set(route.nodes) if route is not None else {topo.source_id(flow)}
    candidates = [n for n in range(topo.n_relays) if n not in used and n != frontier]
    dest = topo.dest_id(flow)
    if dest not in used:
        candidates.append(dest)
    if action_mask is None:
        action_mask = allowed_action_mask(state, flow, frontier)
    feasible = action_mask.any(axis=1)
    return [n for n in candidates if feasible[n]]


def _ranked(state: NetworkState, flow: int, frontier: int, e_nei: int,
            strategy: str, keys: dict[int, float]) -> NeighborSet:
    candidates = sorted(keys, key=lambda n: (keys[n], n))
    if not candidates:
        raise DeadEndError(f"flow {flow}: no eligible neighbor at node {frontier}")
    return NeighborSet(frontier, tuple(candidates[:e_nei]), strategy, e_nei)


def select_distance(state: NetworkState, frontier: int, flow: int,
                    e_nei: int) -> NeighborSet:
    """Closest candidates by Euclidean distance; ties broken by node id."""
    pos = state.topology.positions()
    keys = {n: float(np.sqrt(((pos[n] - pos[frontier]) ** 2).sum()))
            for n in eligible_candidates(state, flow, frontier)}
    return _ranked(state, flow, frontier, e_nei, "distance", keys)


def select_channel(state: NetworkState, frontier: int, flow: int,
                   e_nei: int) -> NeighborSet:
    """Highest average channel gain |h| across all resources."""
    amp = np.sqrt(state.gain2[frontier])            # (N, R)
    mean_amp = amp.mean(axis=1)
    keys = {n: -float(mean_amp[n])
            for n in eligible_candidates(state, flow, frontier)}
    return _ranked(state, flow, frontier, e_nei, "channel", keys)


def select_rate(state: NetworkState, frontier: int, flow: int,
                e_nei: int) -> NeighborSet:
    """Highest average link rate across all resources under current interference."""
    rates = decision_rates(state)[frontier]         # (N, R)
    mean_rate = rates.mean(axis=1)
    keys = {n: -float(mean_rate[n])
            for n in eligible_candidates(state, flow, frontier)}
    return _ranked(state, flow, frontier, e_nei, "rate", keys)


_SELECTORS = {
    "distance": select_distance,
    "channel": select_channel,
    "rate": select_rate,
}


def select(strategy: str, state: NetworkState, frontier: int, flow: int,
           e_nei: int) -> NeighborSet:
    try:
        selector = _SELECTORS[strategy]
    except KeyError:
        raise ValueError(f"unknown neighbor strategy {strategy!r}") from None
    return selector(state, frontier, flow, e_nei)
