"""Encoder-decoder MLP: class embedding -> visual space -> class embedding.

Layers compute ``act(h @ W + b)`` with ``W`` of shape (in, out). Hidden layers
use ReLU; the last encoder layer and the last decoder layer use ELU.
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numkit import ShapeError, elu, elu_grad, relu, relu_grad


class Activation(enum.IntEnum):
    LINEAR = 0
    RELU = 1
    ELU = 2

    def __call__(self, z):
        if self is Activation.RELU:
            return relu(z)
        if self is Activation.ELU:
            return elu(z)
        return z

    def grad(self, z):
        if self is Activation.RELU:
            return relu_grad(z)
        if self is Activation.ELU:
            return elu_grad(z)
        return np.ones_like(z)


@dataclass
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: Activation

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]


@dataclass
class ForwardTrace:
    """Inputs, pre-activations and activations of every layer of one pass."""

    inputs: list[np.ndarray] = field(default_factory=list)
    pre: list[np.ndarray] = field(default_factory=list)
    post: list[np.ndarray] = field(default_factory=list)

    @property
    def output(self) -> np.ndarray:
        return self.post[-1]


@dataclass
class Network:
    encoder: list[Layer]
    decoder: list[Layer]

    @property
    def attr_dim(self) -> int:
        return self.encoder[0].in_dim

    @property
    def feat_dim(self) -> int:
        return self.encoder[-1].out_dim

    @property
    def hidden(self) -> list[int]:
        return [l.out_dim for l in self.encoder[:-1]]

    def layers(self) -> list[Layer]:
        return self.encoder + self.decoder

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list: W0, b0, W1, b1, ... encoder first."""
        out = []
        for layer in self.layers():
            out += [layer.weight, layer.bias]
        return out

    def decay_mask(self) -> list[bool]:
        return [True, False] * len(self.layers())

    def n_encoder_params(self) -> int:
        return 2 * len(self.encoder)

    def copy(self) -> "Network":
        def dup(layers):
            return [Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in layers]

        return Network(dup(self.encoder), dup(self.decoder))


def _glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def build_network(attr_dim: int, feat_dim: int, hidden, rng) -> Network:
    """Create encoder attr_dim -> hidden... -> feat_dim and its mirrored decoder."""
    hidden = [int(h) for h in hidden]
    if attr_dim <= 0 or feat_dim <= 0 or any(h <= 0 for h in hidden):
        raise ValueError(f"layer sizes must be positive: a={attr_dim}, d={feat_dim}, hidden={hidden}")

    def stack(dims):
        layers = []
        for k, (i, o) in enumerate(zip(dims[:-1], dims[1:])):
            act = Activation.ELU if k == len(dims) - 2 else Activation.RELU
            layers.append(Layer(_glorot(rng, i, o), np.zeros(o), act))
        return layers

    encoder = stack([attr_dim, *hidden, feat_dim])
    decoder = stack([feat_dim, *reversed(hidden), attr_dim])
    return Network(encoder, decoder)


def forward(layers: list[Layer], x) -> tuple[np.ndarray, ForwardTrace]:
    h = np.asarray(x, dtype=np.float64)
    single = h.ndim == 1
    if single:
        h = h[None, :]
    if h.shape[1] != layers[0].in_dim:
        raise ShapeError(f"input has {h.shape[1]} columns, network expects {layers[0].in_dim}")
    trace = ForwardTrace()
    for layer in layers:
        z = h @ layer.weight + layer.bias
        trace.inputs.append(h)
        trace.pre.append(z)
        h = layer.activation(z)
        trace.post.append(h)
    return (h[0] if single else h), trace


def backward_layers(layers: list[Layer], trace: ForwardTrace, grad_out: np.ndarray):
    """Backpropagate ``dL/d(output)`` through ``layers``.

    Returns (parameter gradients as [dW0, db0, ...], dL/d(input)).
    """
    grads = [None] * (2 * len(layers))
    g = grad_out
    for k in range(len(layers) - 1, -1, -1):
        layer = layers[k]
        gz = g * layer.activation.grad(trace.pre[k])
        grads[2 * k] = trace.inputs[k].T @ gz
        grads[2 * k + 1] = gz.sum(axis=0)
        g = gz @ layer.weight.T
    return grads, g


def encode(net: Network, y):
    return forward(net.encoder, y)


def decode(net: Network, x):
    return forward(net.decoder, x)


# -- checkpoint I/O -----------------------------------------------------------

MAGIC = b"SEMZSLCK"
VERSION = 1
_PART = {"encoder": 0, "decoder": 1}


@dataclass
class Checkpoint:
    """A network plus the normalization it was trained with."""

    net: Network
    feat_mean: np.ndarray
    feat_std: np.ndarray
    attr_mean: np.ndarray
    attr_std: np.ndarray
    tau: float = 0.0


def checkpoint_bytes(ckpt: Checkpoint) -> bytes:
    net = ckpt.net
    out = bytearray(MAGIC)
    out += struct.pack("<III", VERSION, len(net.encoder), len(net.decoder))
    for part, layers in (("encoder", net.encoder), ("decoder", net.decoder)):
        for layer in layers:
            out += struct.pack("<BIIB", _PART[part], layer.in_dim, layer.out_dim, int(layer.activation))
    for layer in net.layers():
        out += np.ascontiguousarray(layer.weight, dtype="<f8").tobytes()
        out += np.ascontiguousarray(layer.bias, dtype="<f8").tobytes()
    out += struct.pack("<IId", net.feat_dim, net.attr_dim, ckpt.tau)
    for arr in (ckpt.feat_mean, ckpt.feat_std, ckpt.attr_mean, ckpt.attr_std):
        out += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    return bytes(out)


def checkpoint_from_bytes(buf: bytes) -> Checkpoint:
    view = memoryview(buf)
    if bytes(view[:8]) != MAGIC:
        raise ValueError("not a checkpoint file (bad magic)")
    off = 8

    def take(fmt):
        nonlocal off
        vals = struct.unpack_from(fmt, view, off)
        off += struct.calcsize(fmt)
        return vals

    def floats(n):
        nonlocal off
        if off + 8 * n > len(view):
            raise ValueError("truncated checkpoint")
        arr = np.frombuffer(view, dtype="<f8", count=n, offset=off).astype(np.float64)
        off += 8 * n
        return arr

    version, n_enc, n_dec = take("<III")
    if version != VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    specs = [take("<BIIB") for _ in range(n_enc + n_dec)]
    layers = []
    for part, i, o, act in specs:
        w = floats(i * o).reshape(i, o)
        b = floats(o)
        layers.append((part, Layer(w, b, Activation(act))))
    enc = [l for p, l in layers if p == 0]
    dec = [l for p, l in layers if p == 1]
    d, a, tau = take("<IId")
    fm, fs, am, as_ = floats(d), floats(d), floats(a), floats(a)
    if off != len(view):
        raise ValueError("trailing bytes in checkpoint")
    return Checkpoint(Network(enc, dec), fm, fs, am, as_, tau)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    Path(path).write_bytes(checkpoint_bytes(ckpt))


def load_checkpoint(path) -> Checkpoint:
    return checkpoint_from_bytes(Path(path).read_bytes())
