"""Relation-preserving losses and their analytic gradients.

Per quadruplet (y_r, x_i, x_j, x_k) with f = encoder(y_r):

    o1 = -s(f, x_i) + (tau - delta_kr) * s(f, x_k)
    o2 = [tau - s(f, x_j)]_+ + [s(f, x_j) - delta_jr]_+
    o3 = ||y_r - decoder(f)||^2

and the batch objective is mean(o1 + lambda1 * o2 + lambda2 * o3). A missing
x_k drops the second o1 term; a missing x_j drops o2. Hinge kinks use
subgradient 0.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import Network, backward_layers, decode, encode
from .relations import DegenerateVectorError


class BaselineMode(enum.Enum):
    PROPOSED = "proposed"
    B1_MSE_RECONS = "b1"
    B2_NO_SIMILAR = "b2"
    B3_NO_RECONS = "b3"

    @classmethod
    def parse(cls, text) -> "BaselineMode":
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise ValueError(f"unknown mode {text!r}; expected one of proposed, b1, b2, b3") from None


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 1.0
    lambda2: float = 1.0

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("loss weights must be nonnegative")


def effective_settings(mode: BaselineMode, tau: float, weights: LossWeights):
    """(tau, lambda1, lambda2) actually used by ``mode``."""
    if mode is BaselineMode.B2_NO_SIMILAR:
        return 1.0, 0.0, weights.lambda2
    if mode is BaselineMode.B3_NO_RECONS:
        return tau, weights.lambda1, 0.0
    if mode is BaselineMode.B1_MSE_RECONS:
        return tau, 0.0, weights.lambda2
    return tau, weights.lambda1, weights.lambda2


@dataclass
class Quadruplet:
    y_r: np.ndarray
    x_i: np.ndarray
    x_j: np.ndarray | None = None
    x_k: np.ndarray | None = None
    delta_jr: float = np.nan
    delta_kr: float = np.nan


@dataclass
class QuadBatch:
    """Row-stacked quadruplets. Absent x_j / x_k rows are zero and masked off."""

    y_r: np.ndarray
    x_i: np.ndarray
    x_j: np.ndarray
    x_k: np.ndarray
    has_j: np.ndarray
    has_k: np.ndarray
    delta_j: np.ndarray
    delta_k: np.ndarray

    def __len__(self):
        return self.y_r.shape[0]

    @classmethod
    def from_quadruplets(cls, quads) -> "QuadBatch":
        quads = list(quads)
        if not quads:
            raise ValueError("empty batch")
        d = np.asarray(quads[0].x_i).shape[0]

        def rows(attr):
            return np.array([np.zeros(d) if getattr(q, attr) is None else getattr(q, attr) for q in quads],
                            dtype=np.float64)

        return cls(
            y_r=np.array([q.y_r for q in quads], dtype=np.float64),
            x_i=np.array([q.x_i for q in quads], dtype=np.float64),
            x_j=rows("x_j"),
            x_k=rows("x_k"),
            has_j=np.array([q.x_j is not None for q in quads]),
            has_k=np.array([q.x_k is not None for q in quads]),
            delta_j=np.array([q.delta_jr for q in quads], dtype=np.float64),
            delta_k=np.array([q.delta_kr for q in quads], dtype=np.float64),
        )


@dataclass
class LossBreakdown:
    """Batch means of the three terms and the weighted total."""

    o1: float
    o2: float
    o3: float
    total: float
    missing_similar: int = 0
    missing_dissimilar: int = 0


def _cos(p, q):
    np_, nq = np.linalg.norm(p), np.linalg.norm(q)
    if np_ == 0.0 or nq == 0.0:
        raise DegenerateVectorError("cosine similarity is undefined for a zero-norm vector")
    return float(np.dot(p, q) / (np_ * nq))


def loss_o1(f_yr, x_i, x_k, delta_kr, tau) -> float:
    out = -_cos(f_yr, x_i)
    if x_k is not None:
        out += (tau - delta_kr) * _cos(f_yr, x_k)
    return out


def loss_o2(f_yr, x_j, delta_jr, tau) -> float:
    s = _cos(f_yr, x_j)
    return max(tau - s, 0.0) + max(s - delta_jr, 0.0)


def loss_o3(y_r, y_hat) -> float:
    y_r = np.asarray(y_r, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y_r.shape != y_hat.shape:
        raise ValueError(f"reconstruction shape {y_hat.shape} does not match target {y_r.shape}")
    r = y_r - y_hat
    return float(np.dot(r.ravel(), r.ravel()))


def cosine_rows(f, x):
    """Row-wise cosine s and its gradient w.r.t. f: x/(|f||x|) - s f/|f|^2."""
    nf = np.linalg.norm(f, axis=1)
    nx = np.linalg.norm(x, axis=1)
    if np.any(nf == 0.0) or np.any(nx == 0.0):
        raise DegenerateVectorError("cosine similarity is undefined for a zero-norm vector")
    s = np.einsum("ij,ij->i", f, x) / (nf * nx)
    ds = x / (nf * nx)[:, None] - (s / nf**2)[:, None] * f
    return s, ds


def loss_and_grad(batch: QuadBatch, net: Network, weights: LossWeights, tau: float,
                  mode: BaselineMode = BaselineMode.PROPOSED, need_grad: bool = True):
    """Batch objective and (optionally) gradients for ``net.parameters()``."""
    n = len(batch)
    if n == 0:
        raise ValueError("empty batch")
    tau, lam1, lam2 = effective_settings(mode, tau, weights)
    f, enc_trace = encode(net, batch.y_r)
    df = np.zeros_like(f)

    if mode is BaselineMode.B1_MSE_RECONS:
        r = f - batch.x_i
        o1 = np.einsum("ij,ij->i", r, r)
        df += 2.0 * r
        o2 = np.zeros(n)
    else:
        s_i, ds_i = cosine_rows(f, batch.x_i)
        o1 = -s_i
        df -= ds_i
        o2 = np.zeros(n)
        k = np.flatnonzero(batch.has_k)
        if k.size:
            s_k, ds_k = cosine_rows(f[k], batch.x_k[k])
            scale = tau - batch.delta_k[k]
            o1[k] += scale * s_k
            df[k] += scale[:, None] * ds_k
        j = np.flatnonzero(batch.has_j)
        if j.size:
            s_j, ds_j = cosine_rows(f[j], batch.x_j[j])
            lo = tau - s_j
            hi = s_j - batch.delta_j[j]
            o2[j] = np.maximum(lo, 0.0) + np.maximum(hi, 0.0)
            slope = (hi > 0.0).astype(np.float64) - (lo > 0.0).astype(np.float64)
            df[j] += lam1 * slope[:, None] * ds_j

    dec_grads, df_dec = None, 0.0
    o3 = np.zeros(n)
    if mode is not BaselineMode.B3_NO_RECONS:
        y_hat, dec_trace = decode(net, f)
        res = y_hat - batch.y_r
        o3 = np.einsum("ij,ij->i", res, res)
        if need_grad:
            dec_grads, df_dec = backward_layers(net.decoder, dec_trace, (2.0 * lam2 / n) * res)

    per = o1 + lam1 * o2 + lam2 * o3
    breakdown = LossBreakdown(
        o1=float(o1.mean()), o2=float(o2.mean()), o3=float(o3.mean()), total=float(per.mean()),
        missing_similar=int(n - batch.has_j.sum()), missing_dissimilar=int(n - batch.has_k.sum()),
    )
    if not need_grad:
        return breakdown, None

    enc_grads, _ = backward_layers(net.encoder, enc_trace, df / n + df_dec)
    if dec_grads is None:
        dec_grads = [np.zeros_like(p) for p in net.parameters()[net.n_encoder_params():]]
    return breakdown, enc_grads + dec_grads


def loss_total(batch, net, weights, tau, mode=BaselineMode.PROPOSED) -> LossBreakdown:
    if not isinstance(batch, QuadBatch):
        batch = QuadBatch.from_quadruplets(batch)
    return loss_and_grad(batch, net, weights, tau, mode, need_grad=False)[0]


def backward(batch, net, weights, tau, mode=BaselineMode.PROPOSED) -> list[np.ndarray]:
    if not isinstance(batch, QuadBatch):
        batch = QuadBatch.from_quadruplets(batch)
    return loss_and_grad(batch, net, weights, tau, mode)[1]
