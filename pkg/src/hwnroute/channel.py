"""Radio resources and channel gain models.

Every node carries several communication technologies, each split into
orthogonal subbands; a (technology, subband) pair is one communication
resource. Link gains come either from a parameterized log-distance path-loss
model (optionally with log-normal shadowing) or from a precomputed gain grid
loaded from a text file.
"""

from __future__ import annotations

import hashlib
import io
import struct
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


class ChannelError(ValueError):
    pass


class GridFormatError(ChannelError):
    """A gain-grid file does not conform to the documented format."""


@dataclass(frozen=True)
class CommResource:
    """One (technology, subband) pair. Distinct resources never interfere."""

    tech_index: int
    subband_index: int
    center_freq_hz: float
    bandwidth_hz: float


@dataclass(frozen=True)
class ResourceSet:
    """Ordered collection of every communication resource in the network."""

    resources: tuple[CommResource, ...]
    tech_count: int

    def __post_init__(self):
        pairs = [(r.tech_index, r.subband_index) for r in self.resources]
        if len(set(pairs)) != len(pairs):
            raise ChannelError("duplicate (tech, subband) pair in resource set")
        for r in self.resources:
            if r.center_freq_hz <= 0 or r.bandwidth_hz <= 0:
                raise ChannelError("resource center frequency and bandwidth must be positive")

    def __len__(self) -> int:
        return len(self.resources)

    def __getitem__(self, idx: int) -> CommResource:
        return self.resources[idx]

    def __iter__(self):
        return iter(self.resources)

    @property
    def bandwidths_hz(self) -> np.ndarray:
        return np.array([r.bandwidth_hz for r in self.resources])

    @classmethod
    def from_tech_specs(cls, specs: list[tuple[float, int]]) -> "ResourceSet":
        """Build the set from (center_freq_hz, subband_count) per technology.

        Each technology's total bandwidth is 1% of its center frequency,
        divided evenly across its subbands, so a subband of technology m with
        B subbands has bandwidth 0.01 * f_m / B.
        """
        resources = []
        for m, (freq, n_sub) in enumerate(specs):
            if n_sub < 1:
                raise ChannelError(f"technology {m}: subband count must be >= 1")
            if freq <= 0:
                raise ChannelError(f"technology {m}: center frequency must be positive")
            bw = 0.01 * freq / n_sub
            for j in range(n_sub):
                resources.append(CommResource(m, j, freq, bw))
        return cls(tuple(resources), tech_count=len(specs))


# ---------------------------------------------------------------------------
# Log-distance path loss
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TechPathLoss:
    """Log-distance parameters for one technology.

    ref_loss_db is the loss at the 1 m reference distance; None selects the
    free-space value at the technology's center frequency.
    """

    exponent: float = 3.5
    ref_loss_db: float | None = None
    shadowing_sigma_db: float = 0.0


@dataclass(frozen=True)
class LogDistanceModel:
    """Per-technology log-distance path loss, PL(d) = PL(1 m) + 10 n log10(d)."""

    per_tech: tuple[TechPathLoss, ...]
    kind: str = "log_distance"

    def params_for(self, tech_index: int) -> TechPathLoss:
        return self.per_tech[tech_index]

    @classmethod
    def uniform(cls, tech_count: int, exponent: float = 3.5,
                shadowing_sigma_db: float = 0.0) -> "LogDistanceModel":
        return cls(tuple(TechPathLoss(exponent=exponent,
                                      shadowing_sigma_db=shadowing_sigma_db)
                         for _ in range(tech_count)))


def free_space_ref_loss_db(freq_hz: float) -> float:
    """Free-space path loss at the 1 m reference distance."""
    return float(20.0 * np.log10(4.0 * np.pi * freq_hz / SPEED_OF_LIGHT))


def _ref_loss_db(model: LogDistanceModel, resource: CommResource) -> float:
    p = model.params_for(resource.tech_index)
    if p.ref_loss_db is not None:
        return p.ref_loss_db
    return free_space_ref_loss_db(resource.center_freq_hz)


def _pair_rng(pos_a, pos_b, resource: CommResource, seed: int) -> np.random.Generator:
    # Hash input is symmetric in the endpoints so shadowing and phase draws
    # respect reciprocity. Draw order is fixed: shadowing first, phase second.
    a = tuple(float(x) for x in pos_a)
    b = tuple(float(x) for x in pos_b)
    lo, hi = (a, b) if a <= b else (b, a)
    payload = struct.pack("<q2i6d", seed, resource.tech_index, resource.subband_index,
                          *lo, *hi)
    digest = hashlib.sha256(payload).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "little")))


def _distance(pos_a, pos_b) -> float:
    d2 = ((np.asarray(pos_b, dtype=float) - np.asarray(pos_a, dtype=float)) ** 2).sum()
    return float(np.sqrt(d2))


def gain_power(model: LogDistanceModel, pos_a, pos_b, resource: CommResource,
               seed: int = 0) -> float:
    """Linear power gain |h|^2 of the link, shadowing included."""
    d = _distance(pos_a, pos_b)
    if d == 0.0:
        raise ChannelError("coincident nodes")
    pl_db = _ref_loss_db(model, resource) + 10.0 * model.params_for(
        resource.tech_index).exponent * np.log10(d)
    sigma = model.params_for(resource.tech_index).shadowing_sigma_db
    if sigma > 0.0:
        rng = _pair_rng(pos_a, pos_b, resource, seed)
        pl_db = pl_db + sigma * rng.standard_normal()
    return float(10.0 ** (-pl_db / 10.0))


def gain(model: LogDistanceModel, pos_a, pos_b, resource: CommResource,
         seed: int = 0) -> complex:
    """Complex channel gain: magnitude from the path-loss model, phase uniform.

    The phase is drawn per (node pair, resource, seed) and is inert for all
    rate computations, which only use |h|^2.
    """
    d = _distance(pos_a, pos_b)
    if d == 0.0:
        raise ChannelError("coincident nodes")
    pl_db = _ref_loss_db(model, resource) + 10.0 * model.params_for(
        resource.tech_index).exponent * np.log10(d)
    rng = _pair_rng(pos_a, pos_b, resource, seed)
    sigma = model.params_for(resource.tech_index).shadowing_sigma_db
    if sigma > 0.0:
        pl_db = pl_db + sigma * rng.standard_normal()
    phase = rng.uniform(0.0, 2.0 * np.pi)
    return complex(np.sqrt(10.0 ** (-pl_db / 10.0)) * np.exp(1j * phase))


def gain_power_table(model: LogDistanceModel, positions, resource_set: ResourceSet,
                     seed: int = 0) -> np.ndarray:
    """Dense |h|^2 table over all node pairs and resources.

    Shape (N, N, R) with a zero diagonal; entries match gain_power() exactly.
    Rebuilt whenever node positions change.
    """
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    off_diag = ~np.eye(n, dtype=bool)
    if np.any(dist[off_diag] == 0.0):
        raise ChannelError("coincident nodes")
    with np.errstate(divide="ignore"):
        logd = np.log10(dist)
    table = np.zeros((n, n, len(resource_set)))
    shadowed = []
    for r_idx, res in enumerate(resource_set):
        p = model.params_for(res.tech_index)
        pl_db = _ref_loss_db(model, res) + 10.0 * p.exponent * logd
        with np.errstate(over="ignore"):
            table[:, :, r_idx] = 10.0 ** (-pl_db / 10.0)
        if p.shadowing_sigma_db > 0.0:
            shadowed.append(r_idx)
    if shadowed:
        # Shadowed entries go through the scalar path so the cached table is
        # bit-identical to direct gain_power() calls.
        for i in range(n):
            for j in range(i + 1, n):
                for r_idx in shadowed:
                    value = gain_power(model, pos[i], pos[j], resource_set[r_idx],
                                       seed=seed)
                    table[i, j, r_idx] = value
                    table[j, i, r_idx] = value
    table[np.arange(n), np.arange(n), :] = 0.0
    return table


# ---------------------------------------------------------------------------
# Precomputed gain grids
# ---------------------------------------------------------------------------

@dataclass
class GainGrid:
    """Dense node-pair x resource table of complex gains, reciprocal by construction."""

    gains: np.ndarray  # complex, shape (N, N, R)

    @property
    def n_nodes(self) -> int:
        return self.gains.shape[0]

    @property
    def n_resources(self) -> int:
        return self.gains.shape[2]

    def power_table(self) -> np.ndarray:
        """|h|^2 table with zero diagonal, same layout as gain_power_table()."""
        table = np.abs(self.gains) ** 2
        n = self.n_nodes
        table[np.arange(n), np.arange(n), :] = 0.0
        return table


def _grid_lines(source) -> list[str]:
    if isinstance(source, bytes):
        return source.decode("ascii").splitlines()
    if isinstance(source, str):
        return source.splitlines()
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("ascii")
    return data.splitlines()


def load_gain_grid(source) -> GainGrid:
    """Parse a gain-grid file.

    Format: a header line ``nodes=<N> resources=<R>`` followed by one line per
    entry ``i j r re im`` with 0-based node indices i != j, resource index r,
    and the real/imaginary gain parts in ASCII decimal. Every unordered node
    pair must appear exactly once per resource; lookup is symmetric.
    """
    lines = _grid_lines(source)
    if not lines:
        raise GridFormatError("line 1: missing header")
    header = lines[0].split()
    if (len(header) != 2 or not header[0].startswith("nodes=")
            or not header[1].startswith("resources=")):
        raise GridFormatError(f"line 1: malformed header {lines[0]!r}")
    try:
        n_nodes = int(header[0][len("nodes="):])
        n_resources = int(header[1][len("resources="):])
    except ValueError:
        raise GridFormatError(f"line 1: malformed header {lines[0]!r}") from None
    if n_nodes < 1 or n_resources < 1:
        raise GridFormatError("line 1: node and resource counts must be positive")

    gains = np.zeros((n_nodes, n_nodes, n_resources), dtype=complex)
    seen: set[tuple[int, int, int]] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 5:
            raise GridFormatError(f"line {lineno}: expected 'i j r re im', got {line!r}")
        try:
            i, j, r = int(parts[0]), int(parts[1]), int(parts[2])
            re, im = float(parts[3]), float(parts[4])
        except ValueError:
            raise GridFormatError(f"line {lineno}: non-numeric field in {line!r}") from None
        if not (0 <= i < n_nodes and 0 <= j < n_nodes):
            raise GridFormatError(f"line {lineno}: node index out of range")
        if i == j:
            raise GridFormatError(f"line {lineno}: self-pair entry")
        if not (0 <= r < n_resources):
            raise GridFormatError(f"line {lineno}: resource index out of range")
        key = (min(i, j), max(i, j), r)
        if key in seen:
            raise GridFormatError(f"line {lineno}: duplicate entry for pair "
                                  f"({key[0]}, {key[1]}) resource {r}")
        seen.add(key)
        gains[i, j, r] = gains[j, i, r] = complex(re, im)

    expected = n_nodes * (n_nodes - 1) // 2 * n_resources
    if len(seen) != expected:
        for i in range(n_nodes):
            for j in range(i + 1, n_nodes):
                for r in range(n_resources):
                    if (i, j, r) not in seen:
                        raise GridFormatError(
                            f"incomplete grid: missing entry for pair ({i}, {j}) "
                            f"resource {r}")
    return GainGrid(gains)


def write_gain_grid(grid: GainGrid) -> str:
    """Serialize a grid in canonical form.

    Entries are emitted once per unordered pair with i < j, sorted by
    (i, j, r); floats use Python repr. load_gain_grid() of the result
    round-trips byte-identically.
    """
    out = io.StringIO()
    out.write(f"nodes={grid.n_nodes} resources={grid.n_resources}\n")
    for i in range(grid.n_nodes):
        for j in range(i + 1, grid.n_nodes):
            for r in range(grid.n_resources):
                g = grid.gains[i, j, r]
                out.write(f"{i} {j} {r} {float(g.real)!r} {float(g.imag)!r}\n")
    return out.getvalue()
