"""Shared helpers for constructing exactly controlled network instances."""

from __future__ import annotations

import numpy as np
import pytest

from hwnroute.channel import GainGrid, ResourceSet
from hwnroute.netmodel import NetworkState, Topology


def grid_state(n_relays: int, n_flows: int, gains: np.ndarray,
               resource_set: ResourceSet, positions: np.ndarray | None = None,
               tx_power_dbm: float = 0.0, noise_mode: str = "total",
               noise_dbm: float = -110.0, area_m: float = 10_000.0) -> NetworkState:
    """NetworkState with hand-picked |h| values via a gain grid.

    gains has shape (N, N, R) holding amplitude values; N counts relays first,
    then (source, destination) per flow.
    """
    n = n_relays + 2 * n_flows
    if positions is None:
        # Distinct dummy placement on a line; geometry only matters for
        # features, not for grid-driven gains.
        positions = np.zeros((n, 3))
        positions[:, 0] = np.arange(n, dtype=float) * 10.0 + 5.0
        positions[:, 1] = 5.0
    topo = Topology(positions[:n_relays],
                    positions[n_relays:].reshape(n_flows, 2, 3),
                    area_m)
    grid = GainGrid(np.asarray(gains, dtype=complex))
    return NetworkState.from_grid(topo, resource_set, grid, tx_power_dbm,
                                  noise_mode, noise_dbm)


def gain_for_rate(rate_bps: float, bandwidth_hz: float, noise_w: float,
                  tx_power_w: float = 1e-3) -> float:
    """|h| amplitude making one interference-free hop hit an exact rate."""
    sinr = 2.0 ** (rate_bps / bandwidth_hz) - 1.0
    return float(np.sqrt(sinr * noise_w / tx_power_w))


def flat_resources(count: int, center_freq_hz: float = 400e6) -> ResourceSet:
    """count orthogonal subbands of one technology (equal bandwidth)."""
    return ResourceSet.from_tech_specs([(center_freq_hz, count)])


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))
