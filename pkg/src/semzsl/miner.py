"""Online hard-tuple mining.

For every reference sample r (class c) the miner draws x_i uniformly from
class c, then p candidates from the samples of classes similar to c and p
from classes dissimilar to c. The similar candidate with the largest o2 loss
and the dissimilar candidate with the largest ``(tau - delta) * s`` are kept.

Each reference uses its own RNG stream keyed by (seed, epoch, r), so mining
is independent of batch layout and of the number of worker threads.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import Network, encode
from .numkit import make_rng
from .objectives import Quadruplet
from .relations import IDENTICAL_TOL, SimilarityTable

log = logging.getLogger(__name__)

_MINING_STREAM = 0x4D494E45


@dataclass(frozen=True)
class MinerConfig:
    p: int = 50
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("candidate pool size p must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass
class ClassIndex:
    """Per-class sample lists and similar / dissimilar candidate pools."""

    labels: np.ndarray
    table: SimilarityTable
    tau: float
    samples: dict[int, np.ndarray]
    similar: dict[int, np.ndarray]
    dissimilar: dict[int, np.ndarray]
    similar_pool: dict[int, np.ndarray]
    dissimilar_pool: dict[int, np.ndarray]
    warnings: list[str]

    @property
    def classes(self) -> np.ndarray:
        return np.array(sorted(self.samples), dtype=np.int64)


def build_class_index(labels, table: SimilarityTable, tau: float, sample_ids=None) -> ClassIndex:
    """Partition the classes present in ``sample_ids`` relative to each other.

    ``sample_ids`` defaults to every sample. Candidate pools only contain
    samples from ``sample_ids``. Two distinct classes with identical
    embeddings land in neither pool of each other and are reported.
    """
    labels = np.asarray(labels, dtype=np.int64)
    ids = np.arange(labels.size) if sample_ids is None else np.asarray(sample_ids, dtype=np.int64)
    if ids.size == 0:
        raise ValueError("cannot build a class index without samples")
    classes = np.unique(labels[ids])
    samples = {int(c): ids[labels[ids] == c] for c in classes}
    similar, dissimilar, sim_pool, dis_pool, warnings = {}, {}, {}, {}, []
    for c in classes:
        others = classes[classes != c]
        d = table.delta[c, others]
        sim = others[(d >= tau) & (d < 1.0 - IDENTICAL_TOL)]
        dis = others[d < tau]
        dup = others[d >= 1.0 - IDENTICAL_TOL]
        for o in dup:
            warnings.append(f"class {c} and class {o} have identical embeddings")
        if sim.size == 0:
            warnings.append(f"class {c} has no similar class at tau={tau:g}")
        if dis.size == 0:
            warnings.append(f"class {c} has no dissimilar class at tau={tau:g}")
        c = int(c)
        similar[c], dissimilar[c] = sim, dis
        sim_pool[c] = np.concatenate([samples[int(o)] for o in sim]) if sim.size else np.empty(0, np.int64)
        dis_pool[c] = np.concatenate([samples[int(o)] for o in dis]) if dis.size else np.empty(0, np.int64)
    for w in warnings:
        log.debug(w)
    return ClassIndex(labels, table, float(tau), samples, similar, dissimilar, sim_pool, dis_pool, warnings)


@dataclass
class MinedBatch:
    """Sample indices of mined tuples; -1 marks an absent x_j / x_k."""

    ref: np.ndarray
    ref_class: np.ndarray
    i: np.ndarray
    j: np.ndarray
    k: np.ndarray
    delta_j: np.ndarray
    delta_k: np.ndarray
    cand_j: np.ndarray | None = None
    cand_k: np.ndarray | None = None

    def __len__(self):
        return self.ref.size


def _draw(pool, p, rng):
    if pool.size == 0:
        return np.full(p, -1, dtype=np.int64)
    if pool.size >= p:
        return pool[rng.choice(pool.size, size=p, replace=False)]
    return pool[rng.integers(0, pool.size, size=p)]


def draw_candidates(refs, index: ClassIndex, cfg: MinerConfig, epoch: int = 0):
    """Return (x_i indices, similar candidates B x p, dissimilar candidates B x p)."""
    refs = np.asarray(refs, dtype=np.int64)
    n, p = refs.size, cfg.p
    pos = np.empty(n, dtype=np.int64)
    cj = np.empty((n, p), dtype=np.int64)
    ck = np.empty((n, p), dtype=np.int64)

    def work(lo, hi):
        for b in range(lo, hi):
            r = int(refs[b])
            c = int(index.labels[r])
            rng = make_rng(cfg.seed, _MINING_STREAM, epoch, r)
            own = index.samples[c]
            pos[b] = own[rng.integers(0, own.size)]
            cj[b] = _draw(index.similar_pool[c], p, rng)
            ck[b] = _draw(index.dissimilar_pool[c], p, rng)

    if cfg.workers == 1 or n < 2 * cfg.workers:
        work(0, n)
    else:
        bounds = np.linspace(0, n, cfg.workers + 1).astype(int)
        with ThreadPoolExecutor(cfg.workers) as pool:
            list(pool.map(work, bounds[:-1], bounds[1:]))
    return pos, cj, ck


def unit_rows(m) -> np.ndarray:
    """Rows scaled to unit norm; zero rows stay zero."""
    m = np.asarray(m, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    return np.ascontiguousarray(m / np.where(norms == 0.0, 1.0, norms))


def mine_batch(refs, index: ClassIndex, fhat, xhat, cfg: MinerConfig, tau: float,
               epoch: int = 0, record: bool = False) -> MinedBatch:
    """Mine one tuple per reference.

    ``fhat`` holds unit-norm encoder outputs for every class id and ``xhat``
    unit-norm features for every sample id (a parameter snapshot).
    """
    refs = np.asarray(refs, dtype=np.int64)
    ref_class = index.labels[refs]
    pos, cj, ck = draw_candidates(refs, index, cfg, epoch)
    delta = index.table.delta
    dj = np.where(cj >= 0, delta[ref_class[:, None], index.labels[np.maximum(cj, 0)]], np.nan)
    dk = np.where(ck >= 0, delta[ref_class[:, None], index.labels[np.maximum(ck, 0)]], np.nan)
    fhat = np.ascontiguousarray(fhat, dtype=np.float64)
    xhat = np.ascontiguousarray(xhat, dtype=np.float64)
    j, _ = kernels.select_hardest(fhat, xhat, ref_class, cj, dj, tau, kernels.KIND_SIMILAR)
    k, _ = kernels.select_hardest(fhat, xhat, ref_class, ck, dk, tau, kernels.KIND_DISSIMILAR)
    delta_j = np.where(j >= 0, delta[ref_class, index.labels[np.maximum(j, 0)]], np.nan)
    delta_k = np.where(k >= 0, delta[ref_class, index.labels[np.maximum(k, 0)]], np.nan)
    return MinedBatch(refs, ref_class, pos, j, k, delta_j, delta_k,
                      cj if record else None, ck if record else None)


def mine_quadruplet(r: int, index: ClassIndex, net: Network, features, class_embeddings,
                    cfg: MinerConfig, tau: float, epoch: int = 0) -> Quadruplet:
    """Mine the tuple for a single reference sample ``r``."""
    fhat = unit_rows(encode(net, class_embeddings)[0])
    xhat = unit_rows(features)
    mb = mine_batch([r], index, fhat, xhat, cfg, tau, epoch)
    j, k = int(mb.j[0]), int(mb.k[0])
    return Quadruplet(
        y_r=np.asarray(class_embeddings[mb.ref_class[0]], dtype=np.float64),
        x_i=np.asarray(features[mb.i[0]], dtype=np.float64),
        x_j=None if j < 0 else np.asarray(features[j], dtype=np.float64),
        x_k=None if k < 0 else np.asarray(features[k], dtype=np.float64),
        delta_jr=float(mb.delta_j[0]),
        delta_kr=float(mb.delta_k[0]),
    )
