"""Numeric building blocks: dense kernels, activations, seeded RNG streams and Adam.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 in row-major
(C) order. Everything here is a pure function except :class:`AdamState`,
which is owned by one training loop at a time.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ELU_ALPHA = 1.0
STD_FLOOR = 1e-12


class ShapeError(ValueError):
    """Raised when operand shapes do not agree."""


def as_matrix(x, name: str = "x") -> np.ndarray:
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ShapeError(f"{name}: expected a 2-d matrix, got shape {a.shape}")
    return a


def matmul(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: {a.shape} x {b.shape} (inner dims {a.shape[1]} != {b.shape[0]})")
    return a @ b


def relu(x) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_grad(x) -> np.ndarray:
    # subgradient at 0 is 0
    return (np.asarray(x, dtype=np.float64) > 0.0).astype(np.float64)


def elu(x, alpha: float = ELU_ALPHA) -> np.ndarray:
    if alpha <= 0:
        raise ValueError("elu alpha must be positive")
    x = np.asarray(x, dtype=np.float64)
    # expm1 on the clipped branch avoids overflow warnings for large positive x
    return np.where(x > 0.0, x, alpha * np.expm1(np.minimum(x, 0.0)))


def elu_grad(x, alpha: float = ELU_ALPHA) -> np.ndarray:
    if alpha <= 0:
        raise ValueError("elu alpha must be positive")
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0.0, 1.0, alpha * np.exp(np.minimum(x, 0.0)))


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return a PCG64 generator for ``seed`` and an optional sub-stream key.

    Distinct ``stream`` tuples give statistically independent generators, so
    per-epoch and per-sample streams can be drawn in any order (or from
    worker threads) without changing results.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(s) for s in stream]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


@dataclass
class AdamState:
    """Moment buffers and hyperparameters for :func:`adam_step`."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 5e-5
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")


def adam_step(params, grads, state: AdamState, decay_mask=None) -> None:
    """Apply one Adam update in place to every array in ``params``.

    Weight decay is coupled: ``weight_decay * param`` is added to the gradient
    before the moment updates. ``decay_mask`` (one bool per parameter) turns the
    decay off for individual arrays, e.g. biases.
    """
    if len(params) != len(grads):
        raise ShapeError(f"{len(params)} parameters but {len(grads)} gradients")
    if decay_mask is None:
        decay_mask = [True] * len(params)
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    if len(state.m) != len(params):
        raise ShapeError("optimizer state does not match the parameter set")

    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for p, g, m, v, decay in zip(params, grads, state.m, state.v, decay_mask):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"parameter {p.shape} vs gradient {g.shape} vs state {m.shape}")
        if decay and state.weight_decay:
            g = g + state.weight_decay * p
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def standardize_fit(x) -> tuple[np.ndarray, np.ndarray]:
    """Columnwise mean and population std; near-constant columns get std 1."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
        raise ShapeError(f"cannot fit normalization on an empty matrix of shape {x.shape}")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std < STD_FLOOR, 1.0, std)
    return mean, std


def standardize_apply(x, mean, std) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != mean.shape[0]:
        raise ShapeError(f"normalization stats have {mean.shape[0]} columns, data has {x.shape[-1]}")
    return (x - mean) / std
