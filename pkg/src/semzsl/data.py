"""Dataset container, directory format I/O and the synthetic generator.

Directory layout (all text, no headers)::

    features.csv      N rows, d comma-separated floats
    labels.csv        N lines, zero-based class id
    attributes.csv    C rows, a comma-separated floats (class embeddings)
    classes.txt       C lines, class names
    splits/train.txt  zero-based sample indices, one per line
    splits/val.txt
    splits/test_unseen.txt
    splits/test_seen.txt

Unseen classes are the classes of the ``test_unseen`` samples; every other
class is seen.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numkit import make_rng

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test_unseen", "test_seen")
FLOAT_FMT = "%.17g"


class DatasetError(ValueError):
    """A dataset violates one of its structural invariants."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_embeddings: np.ndarray
    class_names: list[str]
    splits: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.class_embeddings = np.asarray(self.class_embeddings, dtype=np.float64)
        self.splits = {k: np.asarray(self.splits.get(k, []), dtype=np.int64) for k in SPLITS}
        self.validate()

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_classes(self) -> int:
        return self.class_embeddings.shape[0]

    @property
    def feat_dim(self) -> int:
        return self.features.shape[1]

    @property
    def attr_dim(self) -> int:
        return self.class_embeddings.shape[1]

    @property
    def unseen_classes(self) -> np.ndarray:
        return np.unique(self.labels[self.splits["test_unseen"]])

    @property
    def seen_classes(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.n_classes), self.unseen_classes)

    @property
    def train_classes(self) -> np.ndarray:
        return np.unique(self.labels[self.splits["train"]])

    def split(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        idx = self.splits[name]
        return self.features[idx], self.labels[idx]

    def validate(self) -> None:
        x, y, emb = self.features, self.labels, self.class_embeddings
        if x.ndim != 2 or emb.ndim != 2:
            raise DatasetError("shape", "features and attributes must be 2-d matrices")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise DatasetError("shape", f"{y.shape[0]} labels for {x.shape[0]} feature rows")
        if len(self.class_names) != emb.shape[0]:
            raise DatasetError("shape", f"{len(self.class_names)} class names for {emb.shape[0]} embeddings")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(emb))):
            raise DatasetError("non-finite", "features or attributes contain NaN/Inf")
        if y.size and (y.min() < 0 or y.max() >= emb.shape[0]):
            raise DatasetError("label-range", f"labels must lie in [0, {emb.shape[0]})")
        seen_idx = set()
        for name in SPLITS:
            idx = self.splits[name]
            if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
                raise DatasetError("split-range", f"split {name} indexes outside [0, {x.shape[0]})")
            if np.unique(idx).size != idx.size:
                raise DatasetError("split-duplicate", f"split {name} repeats a sample index")
            overlap = seen_idx.intersection(idx.tolist())
            if overlap:
                raise DatasetError("split-overlap", f"split {name} shares sample {min(overlap)} with another split")
            seen_idx.update(idx.tolist())
        unseen = set(self.unseen_classes.tolist())
        for name in ("train", "val", "test_seen"):
            bad = unseen.intersection(y[self.splits[name]].tolist())
            if bad:
                raise DatasetError(
                    "split-violation", f"unseen class {min(bad)} has samples in the {name} split")


def _read_matrix(path: Path, name: str) -> np.ndarray:
    if not path.is_file():
        raise FileNotFoundError(f"missing {name}: {path}")
    text = path.read_text().strip()
    if not text:
        raise DatasetError("empty", f"{path} is empty")
    rows = [line.split(",") for line in text.splitlines()]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DatasetError("shape", f"{path} has ragged rows (widths {sorted(widths)})")
    try:
        return np.array(rows, dtype=np.float64)
    except ValueError as exc:
        raise DatasetError("parse", f"{path}: {exc}") from None


def _read_ints(path: Path, name: str) -> np.ndarray:
    if not path.is_file():
        raise FileNotFoundError(f"missing {name}: {path}")
    try:
        return np.array([int(t) for t in path.read_text().split()], dtype=np.int64)
    except ValueError as exc:
        raise DatasetError("parse", f"{path}: {exc}") from None


def load_dataset(directory) -> Dataset:
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {root}")
    names_path = root / "classes.txt"
    if not names_path.is_file():
        raise FileNotFoundError(f"missing class names: {names_path}")
    return Dataset(
        features=_read_matrix(root / "features.csv", "features"),
        labels=_read_ints(root / "labels.csv", "labels"),
        class_embeddings=_read_matrix(root / "attributes.csv", "attributes"),
        class_names=names_path.read_text().splitlines(),
        splits={s: _read_ints(root / "splits" / f"{s}.txt", f"{s} split") for s in SPLITS},
    )


def _write_matrix(path: Path, m: np.ndarray) -> None:
    path.write_text("".join(",".join(FLOAT_FMT % v for v in row) + "\n" for row in m))


def _write_ints(path: Path, v) -> None:
    path.write_text("".join(f"{int(i)}\n" for i in v))


def save_dataset(ds: Dataset, directory) -> None:
    root = Path(directory)
    (root / "splits").mkdir(parents=True, exist_ok=True)
    _write_matrix(root / "features.csv", ds.features)
    _write_ints(root / "labels.csv", ds.labels)
    _write_matrix(root / "attributes.csv", ds.class_embeddings)
    (root / "classes.txt").write_text("".join(f"{n}\n" for n in ds.class_names))
    for s in SPLITS:
        _write_ints(root / "splits" / f"{s}.txt", ds.splits[s])


@dataclass(frozen=True)
class SynthConfig:
    classes_seen: int = 15
    classes_unseen: int = 5
    attr_dim: int = 16
    feat_dim: int = 64
    per_class: int = 50
    noise: float = 0.1
    seed: int = 0
    val_classes: int = 0
    val_fraction: float = 0.2
    test_seen_fraction: float = 0.2

    def __post_init__(self):
        for name in ("classes_seen", "classes_unseen", "attr_dim", "feat_dim", "per_class"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")
        if not 0 <= self.val_classes < self.classes_seen:
            raise ValueError("val_classes must leave at least one training class")
        if not (0 <= self.val_fraction and 0 <= self.test_seen_fraction
                and self.val_fraction + self.test_seen_fraction < 1):
            raise ValueError("held-out fractions must leave training samples")


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Linear toy world: x = W y_c + noise, class embeddings uniform on the sphere.

    All samples of the last ``classes_unseen`` classes go to test_unseen. With
    ``val_classes > 0`` the last ``val_classes`` seen classes are validation
    classes (every sample in val, none in train), mirroring the class-disjoint
    validation of the zero-shot protocol; otherwise ``val_fraction`` of every
    seen class is held out. The remaining seen classes give up
    ``test_seen_fraction`` of their samples to test_seen. Sample order is
    shuffled so contiguous batches mix classes.
    """
    rng = make_rng(cfg.seed, 0x5E7)
    n_cls = cfg.classes_seen + cfg.classes_unseen
    emb = rng.standard_normal((n_cls, cfg.attr_dim))
    emb /= np.linalg.norm(emb, axis=1, keepdims=True)
    w = rng.standard_normal((cfg.attr_dim, cfg.feat_dim))
    centers = emb @ w
    labels = np.repeat(np.arange(n_cls), cfg.per_class)
    feats = centers[labels] + cfg.noise * rng.standard_normal((labels.size, cfg.feat_dim))
    order = rng.permutation(labels.size)
    labels, feats = labels[order], feats[order]

    splits = {s: [] for s in SPLITS}
    n_val = 0 if cfg.val_classes else int(round(cfg.val_fraction * cfg.per_class))
    n_ts = int(round(cfg.test_seen_fraction * cfg.per_class))
    first_val = cfg.classes_seen - cfg.val_classes
    for c in range(n_cls):
        idx = np.flatnonzero(labels == c)
        if c >= cfg.classes_seen:
            splits["test_unseen"] += idx.tolist()
            continue
        if c >= first_val:
            splits["val"] += idx.tolist()
            continue
        splits["val"] += idx[:n_val].tolist()
        splits["test_seen"] += idx[n_val:n_val + n_ts].tolist()
        splits["train"] += idx[n_val + n_ts:].tolist()
    splits = {k: np.sort(np.array(v, dtype=np.int64)) for k, v in splits.items()}
    names = [f"class_{c:03d}" for c in range(n_cls)]
    return Dataset(feats, labels, emb, names, splits)
