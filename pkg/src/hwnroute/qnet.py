"""Dueling Q-network with hand-written forward and backward passes.

A shared trunk of three 300-wide rectified layers feeds two streams: a state
value stream (hidden 300 and 150, scalar output) and an action advantage
stream (hidden 300 and 150, one output per action). They recombine as
Q = V + A - mean(A), so the advantages are zero-mean by construction.
Training is plain mean-squared-error regression on the taken action,
optimized with Adam. Everything is numpy, float64, and seeded.

All parameters live in one flat vector (layer weights and biases are views
into it), which keeps the optimizer to a handful of whole-vector operations.
For the default widths the network has 468,461 parameters at 10 candidate
slots: trunk 5*10*300 + 300*300 + 300*300 (+ biases), value stream
300*300 + 300*150 + 150*1 (+ biases), advantage stream
300*300 + 300*150 + 150*10 (+ biases).
"""

from __future__ import annotations

import struct

import numpy as np

CHECKPOINT_MAGIC = b"HWNQ"
CHECKPOINT_VERSION = 1


class Dense:
    """Fully connected layer over views into the network's flat storage."""

    def __init__(self, weight: np.ndarray, bias: np.ndarray,
                 grad_weight: np.ndarray, grad_bias: np.ndarray):
        self.weight = weight          # (out, in)
        self.bias = bias              # (out,)
        self.grad_weight = grad_weight
        self.grad_bias = grad_bias
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.weight.T + self.bias

    def backward(self, dout: np.ndarray) -> np.ndarray:
        self.grad_weight += dout.T @ self._x
        self.grad_bias += dout.sum(axis=0)
        return dout @ self.weight


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


class _Stack:
    """Dense layers with rectifier activations between them (linear output)."""

    def __init__(self, layers: list[Dense]):
        self.layers = layers
        self._pre: list[np.ndarray] = []

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._pre = []
        for i, layer in enumerate(self.layers):
            x = layer.forward(x)
            if i < len(self.layers) - 1:
                self._pre.append(x)
                x = _relu(x)
        return x

    def backward(self, dout: np.ndarray) -> np.ndarray:
        for i in range(len(self.layers) - 1, -1, -1):
            if i < len(self.layers) - 1:
                dout = dout * (self._pre[i] > 0.0)
            dout = self.layers[i].backward(dout)
        return dout


def _layer_dims(n_actions: int, trunk_widths, stream_widths,
                features_per_action: int) -> list[tuple[str, int, int]]:
    """(name, n_in, n_out) for every layer in fixed order."""
    dims = []
    sizes = [features_per_action * n_actions, *trunk_widths]
    for i in range(len(sizes) - 1):
        dims.append((f"trunk{i}", sizes[i], sizes[i + 1]))
    vsizes = [trunk_widths[-1], *stream_widths, 1]
    for i in range(len(vsizes) - 1):
        dims.append((f"value{i}", vsizes[i], vsizes[i + 1]))
    asizes = [trunk_widths[-1], *stream_widths, n_actions]
    for i in range(len(asizes) - 1):
        dims.append((f"adv{i}", asizes[i], asizes[i + 1]))
    return dims


class QNet:
    """Dueling action-value network over the fixed-size candidate slots."""

    def __init__(self, n_actions: int, dims: list[tuple[str, int, int]],
                 params: np.ndarray | None = None):
        self.n_actions = n_actions
        self.dims = dims
        total = sum(n_in * n_out + n_out for _name, n_in, n_out in dims)
        self.params = params if params is not None else np.zeros(total)
        if self.params.shape != (total,):
            raise ValueError(f"parameter vector must have {total} entries")
        self.grads = np.zeros(total)
        self._layers_by_name: dict[str, Dense] = {}
        offset = 0
        for name, n_in, n_out in dims:
            w = self.params[offset:offset + n_in * n_out].reshape(n_out, n_in)
            gw = self.grads[offset:offset + n_in * n_out].reshape(n_out, n_in)
            offset += n_in * n_out
            b = self.params[offset:offset + n_out]
            gb = self.grads[offset:offset + n_out]
            offset += n_out
            self._layers_by_name[name] = Dense(w, b, gw, gb)
        group = lambda g: [self._layers_by_name[f"{g}{i}"]
                           for i in range(sum(1 for n, _a, _b in dims
                                              if n.startswith(g) and n[len(g):].isdigit()))]
        self.trunk = _Stack(group("trunk"))
        self.value = _Stack(group("value"))
        self.adv = _Stack(group("adv"))

    @property
    def input_dim(self) -> int:
        return self.trunk.layers[0].weight.shape[1]

    @classmethod
    def create(cls, n_actions: int, seed: int = 0,
               trunk_widths: tuple[int, ...] = (300, 300, 300),
               stream_widths: tuple[int, ...] = (300, 150),
               features_per_action: int = 5) -> "QNet":
        net = cls(n_actions, _layer_dims(n_actions, trunk_widths, stream_widths,
                                         features_per_action))
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        for name, _n_in, _n_out in net.dims:
            layer = net._layers_by_name[name]
            n_in = layer.weight.shape[1]
            layer.weight[:] = rng.standard_normal(layer.weight.shape) * np.sqrt(2.0 / n_in)
            layer.bias[:] = 0.0
        return net

    def layers(self) -> list[Dense]:
        return [self._layers_by_name[name] for name, _i, _o in self.dims]

    def n_parameters(self) -> int:
        return self.params.size

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Q-values, shape (batch, n_actions). Caches activations for backward."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        t = self.trunk.forward(x)
        self._t_pre = t
        t_relu = _relu(t)
        v = self.value.forward(t_relu)
        a = self.adv.forward(t_relu)
        return v + a - a.mean(axis=1, keepdims=True)

    def backward(self, dq: np.ndarray) -> None:
        """Accumulate parameter gradients from dLoss/dQ of the last forward."""
        dv = dq.sum(axis=1, keepdims=True)
        da = dq - dq.mean(axis=1, keepdims=True)
        dt = self.value.backward(dv) + self.adv.backward(da)
        dt = dt * (self._t_pre > 0.0)
        self.trunk.backward(dt)

    def zero_grad(self) -> None:
        self.grads[:] = 0.0


def q_forward(net: QNet, features: np.ndarray) -> np.ndarray:
    """Q-values for one feature vector (n_actions,)."""
    return net.forward(features.reshape(1, -1))[0]


class Adam:
    """Adaptive-moment optimizer over the network's flat parameter vector."""

    def __init__(self, net: QNet, learning_rate: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.net = net
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = np.zeros_like(net.params)
        self._v = np.zeros_like(net.params)

    def step(self) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        sqrt_b2c = float(np.sqrt(1.0 - self.beta2 ** self.t))
        # lr * (m / b1c) / (sqrt(v / b2c) + eps), with eps folded into the
        # denominator at the sqrt(b2c) scale.
        alpha = self.learning_rate * sqrt_b2c / b1c
        g = self.net.grads
        self._m *= self.beta1
        self._m += (1.0 - self.beta1) * g
        self._v *= self.beta2
        self._v += (1.0 - self.beta2) * (g * g)
        denom = np.sqrt(self._v)
        denom += self.eps * sqrt_b2c
        update = self._m / denom
        update *= alpha
        self.net.params -= update

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {"adam_t": np.array([self.t]), "adam_m": self._m, "adam_v": self._v}

    def load_state_arrays(self, arrays) -> None:
        self.t = int(arrays["adam_t"][0])
        self._m[:] = arrays["adam_m"]
        self._v[:] = arrays["adam_v"]


# ---------------------------------------------------------------------------
# Checkpoint file format (version 1)
#
#   magic      4 bytes  b"HWNQ"
#   version    uint32 LE
#   n_actions  uint32 LE
#   n_arrays   uint32 LE
#   per array: name_len uint16 LE, name ASCII, ndim uint32 LE, dims uint32 LE each
#   then every array as float64 little-endian, row-major, in listed order
# ---------------------------------------------------------------------------

def _named_arrays(net: QNet) -> list[tuple[str, np.ndarray]]:
    out = []
    for name, _n_in, _n_out in net.dims:
        layer = net._layers_by_name[name]
        out.append((f"{name}.weight", layer.weight))
        out.append((f"{name}.bias", layer.bias))
    return out


def save_checkpoint(path, net: QNet) -> None:
    arrays = _named_arrays(net)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<III", CHECKPOINT_VERSION, net.n_actions, len(arrays)))
        for name, arr in arrays:
            encoded = name.encode("ascii")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        for _name, arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> QNet:
    with open(path, "rb") as fh:
        if fh.read(4) != CHECKPOINT_MAGIC:
            raise ValueError("not a model checkpoint (bad magic)")
        version, n_actions, n_arrays = struct.unpack("<III", fh.read(12))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        specs = []
        for _ in range(n_arrays):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("ascii")
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            specs.append((name, shape))
        arrays = {}
        for name, shape in specs:
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(shape)
            arrays[name] = data.astype(float)

    dims = []
    for name, shape in specs:
        if name.endswith(".weight"):
            n_out, n_in = shape
            dims.append((name[:-len(".weight")], n_in, n_out))
    net = QNet(n_actions, dims)
    for name, _n_in, _n_out in dims:
        if f"{name}.bias" not in arrays:
            raise ValueError(f"checkpoint missing bias for layer {name}")
        layer = net._layers_by_name[name]
        layer.weight[:] = arrays[f"{name}.weight"]
        layer.bias[:] = arrays[f"{name}.bias"]
    if net.adv.layers[-1].weight.shape[0] != n_actions:
        raise ValueError("checkpoint dimension table inconsistent with action count")
    return net
