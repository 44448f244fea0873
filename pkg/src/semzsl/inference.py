"""Approximate semantic description of an image from a class without an embedding."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluator import class_scores


@dataclass(frozen=True)
class SemanticEntry:
    class_id: int
    name: str
    score: float
    tag: str  # "similar" or "dissimilar"


def semantic_report(model, x, class_embeddings, classes, tau: float = 0.0, names=None, top=None):
    """Rank known classes by cosine similarity to feature ``x``.

    Classes scoring at least ``tau`` are tagged similar. Order is descending
    score, ties by class id; ``top`` truncates the list.
    """
    scores, cands = class_scores(model, np.asarray(x, dtype=np.float64).reshape(1, -1), class_embeddings, classes)
    s = scores[0]
    order = np.lexsort((cands, -s))
    if top is not None:
        order = order[:top]
    return [
        SemanticEntry(
            class_id=int(cands[i]),
            name=names[cands[i]] if names is not None else str(cands[i]),
            score=float(s[i]),
            tag="similar" if s[i] >= tau else "dissimilar",
        )
        for i in order
    ]


def format_table(entries) -> str:
    width = max([len(e.name) for e in entries] + [5])
    lines = [f"{'class':<{width}}  {'score':>8}  tag"]
    lines += [f"{e.name:<{width}}  {e.score:>8.4f}  {e.tag}" for e in entries]
    return "\n".join(lines) + "\n"


def to_csv(entries) -> str:
    return "class,score,tag\n" + "".join(f"{e.name},{e.score!r},{e.tag}\n" for e in entries)
