"""Conventional / generalized zero-shot evaluation and top-k accuracy.

A test feature is assigned to the candidate class whose mapped embedding has
the highest cosine similarity with it. Accuracies are averaged per class.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Checkpoint, encode
from .numkit import standardize_apply
from .relations import DegenerateVectorError

log = logging.getLogger(__name__)


def _candidates(classes, n_classes) -> np.ndarray:
    cands = np.unique(np.asarray(classes, dtype=np.int64))
    if cands.size == 0:
        raise ValueError("candidate class set is empty")
    if cands[0] < 0 or cands[-1] >= n_classes:
        raise KeyError(f"no class embedding for candidate class {int(cands[-1] if cands[-1] >= n_classes else cands[0])}")
    return cands


def class_scores(model: Checkpoint, x, class_embeddings, classes):
    """Cosine scores (n x m) of features ``x`` against mapped ``classes``.

    Returns (scores, sorted candidate ids). Raw inputs are normalized with the
    model's stored statistics.
    """
    emb = np.asarray(class_embeddings, dtype=np.float64)
    cands = _candidates(classes, emb.shape[0])
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    xn = standardize_apply(x, model.feat_mean, model.feat_std)
    f, _ = encode(model.net, standardize_apply(emb[cands], model.attr_mean, model.attr_std))
    nx = np.linalg.norm(xn, axis=1)
    nf = np.linalg.norm(f, axis=1)
    if np.any(nx == 0.0):
        raise DegenerateVectorError(f"test sample {int(np.flatnonzero(nx == 0.0)[0])} is the zero vector after normalization")
    if np.any(nf == 0.0):
        raise DegenerateVectorError(f"class {int(cands[np.flatnonzero(nf == 0.0)[0]])} maps to the zero vector")
    scores = (xn / nx[:, None]) @ (f / nf[:, None]).T
    return np.clip(scores, -1.0, 1.0), cands


def predict(model: Checkpoint, x, class_embeddings, classes) -> np.ndarray:
    """Predicted class id per row of ``x``; ties go to the smallest class id."""
    scores, cands = class_scores(model, x, class_embeddings, classes)
    return cands[np.argmax(scores, axis=1)]


def per_class_top1(predictions, labels, classes):
    """Per-class accuracy map and its unweighted mean over classes with samples."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    acc = {}
    for c in np.unique(np.asarray(classes, dtype=np.int64)):
        mask = labels == c
        if not mask.any():
            log.warning("class %d has no test samples; excluded from the mean", c)
            continue
        acc[int(c)] = float(np.mean(predictions[mask] == c))
    mean = float(np.mean(list(acc.values()))) if acc else 0.0
    return acc, mean


def harmonic_mean(ts: float, tr: float) -> float:
    return 2.0 * ts * tr / (ts + tr) if ts + tr > 0 else 0.0


def _pool(ds, split):
    idx = ds.splits[split]
    if idx.size == 0:
        raise ValueError(f"the {split} split is empty")
    return ds.features[idx], ds.labels[idx]


def evaluate_conventional(model: Checkpoint, ds, split: str = "test_unseen"):
    """Per-class top-1 on ``split`` with candidates restricted to its own classes."""
    x, y = _pool(ds, split)
    classes = np.unique(y)
    return per_class_top1(predict(model, x, ds.class_embeddings, classes), y, classes)


def evaluate_generalized(model: Checkpoint, ds, classes=None):
    """(ts, tr, H, per-class maps) with every class as a candidate."""
    classes = np.arange(ds.n_classes) if classes is None else classes
    xu, yu = _pool(ds, "test_unseen")
    xs, ys = _pool(ds, "test_seen")
    ts_map, ts = per_class_top1(predict(model, xu, ds.class_embeddings, classes), yu, np.unique(yu))
    tr_map, tr = per_class_top1(predict(model, xs, ds.class_embeddings, classes), ys, np.unique(ys))
    return ts, tr, harmonic_mean(ts, tr), ts_map, tr_map


def topk_hits(scores, cands, labels, k):
    """Boolean hit-within-top-k per row, ranking by score then class id."""
    labels = np.asarray(labels)
    col = np.searchsorted(cands, labels)
    if np.any(col >= cands.size) or np.any(cands[np.minimum(col, cands.size - 1)] != labels):
        raise ValueError("a sample's true class is not among the candidates")
    true = scores[np.arange(len(labels)), col]
    ahead = (scores > true[:, None]).sum(axis=1)
    ahead += ((scores == true[:, None]) & (np.arange(cands.size)[None, :] < col[:, None])).sum(axis=1)
    return ahead < k


def topk_accuracy(model: Checkpoint, x, labels, class_embeddings, classes, k: int) -> float:
    scores, cands = class_scores(model, x, class_embeddings, classes)
    if not 1 <= k <= cands.size:
        raise ValueError(f"k={k} outside [1, {cands.size}] candidates")
    hits = topk_hits(scores, cands, labels, k)
    labels = np.asarray(labels)
    per = [hits[labels == c].mean() for c in np.unique(labels)]
    return float(np.mean(per))


@dataclass
class EvalReport:
    per_class_acc: dict[int, float] = field(default_factory=dict)
    zsl_acc: float | None = None
    ts: float | None = None
    tr: float | None = None
    harmonic: float | None = None
    topk: dict[int, float] = field(default_factory=dict)
    seen_per_class_acc: dict[int, float] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = []
        for name in ("zsl_acc", "ts", "tr", "harmonic"):
            v = getattr(self, name)
            if v is not None:
                lines.append(f"{name} = {v!r}")
        for k in sorted(self.topk):
            lines.append(f"top{k}_acc = {self.topk[k]!r}")
        return "\n".join(lines) + "\n"

    def to_csv(self, class_names=None) -> str:
        rows = ["class,name,pool,accuracy"]
        for pool, table in (("unseen", self.per_class_acc), ("seen", self.seen_per_class_acc)):
            for c in sorted(table):
                name = class_names[c] if class_names else str(c)
                rows.append(f"{c},{name},{pool},{table[c]!r}")
        return "\n".join(rows) + "\n"

    def write(self, path, class_names=None) -> None:
        path = Path(path)
        path.write_text(self.to_text())
        path.with_suffix(path.suffix + ".csv").write_text(self.to_csv(class_names))


def evaluate(model: Checkpoint, ds, generalized: bool = False, topk=()) -> EvalReport:
    per_class, acc = evaluate_conventional(model, ds)
    report = EvalReport(per_class_acc=per_class, zsl_acc=acc)
    if generalized:
        report.ts, report.tr, report.harmonic, _, report.seen_per_class_acc = evaluate_generalized(model, ds)
    x, y = _pool(ds, "test_unseen")
    unseen = np.unique(y)
    for k in topk:
        report.topk[int(k)] = topk_accuracy(model, x, y, ds.class_embeddings, unseen, int(k))
    return report
