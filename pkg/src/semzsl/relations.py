"""Cosine similarity and the identical / similar / dissimilar class taxonomy."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

IDENTICAL_TOL = 1e-9


class DegenerateVectorError(ValueError):
    """A vector with zero norm was passed where a direction is required."""


class Relation(enum.Enum):
    IDENTICAL = "identical"
    SIMILAR = "similar"
    DISSIMILAR = "dissimilar"


@dataclass(frozen=True)
class RelationConfig:
    """Similarity threshold tau.

    Valid thresholds lie in (-1, 1). ``tau = 1`` is also accepted because the
    no-similar-class baseline is defined by that setting; it makes every
    non-identical class dissimilar.
    """

    tau: float = 0.0

    def __post_init__(self):
        if not (-1.0 < self.tau <= 1.0):
            raise ValueError(f"tau must lie in (-1, 1], got {self.tau}")


def cosine(p, q) -> float:
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise ValueError(f"cosine of vectors with different sizes {p.size} and {q.size}")
    np_, nq = np.linalg.norm(p), np.linalg.norm(q)
    if np_ == 0.0 or nq == 0.0:
        raise DegenerateVectorError("cosine similarity is undefined for a zero-norm vector")
    return float(min(1.0, max(-1.0, np.dot(p, q) / (np_ * nq))))


@dataclass(frozen=True)
class SimilarityTable:
    """Pairwise cosine similarities between class embeddings (C x C)."""

    delta: np.ndarray

    def __post_init__(self):
        self.delta.setflags(write=False)

    @property
    def n_classes(self) -> int:
        return self.delta.shape[0]

    def __getitem__(self, key):
        return self.delta[key]


def build_similarity_table(class_embeddings) -> SimilarityTable:
    y = np.asarray(class_embeddings, dtype=np.float64)
    if y.ndim != 2:
        raise ValueError("class embeddings must form a 2-d matrix")
    norms = np.linalg.norm(y, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DegenerateVectorError(f"class {int(zero[0])} has a zero-norm embedding")
    u = y / norms[:, None]
    delta = np.clip(u @ u.T, -1.0, 1.0)
    # exact symmetry and unit diagonal regardless of summation order
    delta = 0.5 * (delta + delta.T)
    np.fill_diagonal(delta, 1.0)
    dup = np.argwhere(np.triu(delta >= 1.0 - IDENTICAL_TOL, k=1))
    for m, n in dup:
        log.warning("classes %d and %d have identical embeddings", m, n)
    return SimilarityTable(delta)


def classify_relation(delta: float, cfg: RelationConfig | float) -> Relation:
    tau = cfg.tau if isinstance(cfg, RelationConfig) else float(cfg)
    if delta >= 1.0 - IDENTICAL_TOL:
        return Relation.IDENTICAL
    if delta >= tau:
        return Relation.SIMILAR
    return Relation.DISSIMILAR


def select_tau(candidates, evaluate) -> float:
    """Return the candidate with the highest ``evaluate(tau)`` score.

    Ties go to the smaller tau.
    """
    cands = sorted(float(c) for c in candidates)
    if not cands:
        raise ValueError("select_tau needs at least one candidate")
    best, best_score = None, -np.inf
    for tau in cands:
        score = evaluate(tau)
        log.info("tau=%g validation accuracy %.4f", tau, score)
        if score > best_score:
            best, best_score = tau, score
    return best
