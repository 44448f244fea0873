"""Training loop, configuration files and validation-driven hyperparameter search."""
from __future__ import annotations

import dataclasses
import itertools
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset
from .evaluator import per_class_top1, predict
from .miner import MinerConfig, build_class_index, mine_batch, unit_rows
from .model import Checkpoint, build_network, encode
from .numkit import AdamState, adam_step, make_rng, standardize_apply, standardize_fit
from .objectives import BaselineMode, LossWeights, QuadBatch, effective_settings, loss_and_grad
from .relations import RelationConfig, build_similarity_table, select_tau

log = logging.getLogger(__name__)

_INIT_STREAM = 0x1A17
_ORDER_STREAM = 0x0DE2
DEFAULT_TAU_GRID = (-0.2, -0.1, 0.0, 0.1, 0.2)


class TrainingDiverged(RuntimeError):
    """The objective became NaN or infinite."""


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 64
    lr: float = 1e-3
    weight_decay: float = 5e-5
    lambda1: float = 1.0
    lambda2: float = 1.0
    tau: float | str = 0.0
    tau_grid: tuple = DEFAULT_TAU_GRID
    p: int = 50
    seed: int = 0
    mode: BaselineMode = BaselineMode.PROPOSED
    hidden: tuple = (128,)
    workers: int = 1

    def __post_init__(self):
        self.mode = BaselineMode.parse(self.mode)
        if isinstance(self.tau, str):
            self.tau = "auto" if self.tau.strip().lower() == "auto" else float(self.tau)
        if self.tau != "auto":
            RelationConfig(self.tau)
        self.hidden = tuple(int(h) for h in self.hidden)
        self.tau_grid = tuple(float(t) for t in self.tau_grid)
        if self.epochs < 0 or self.batch_size <= 0:
            raise ValueError("epochs must be >= 0 and batch_size > 0")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        LossWeights(self.lambda1, self.lambda2)

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        out = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, BaselineMode):
                v = v.value
            elif isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            out.append(f"{f.name} = {v}")
        return "\n".join(out) + "\n"


_LIST_KEYS = {"hidden", "tau_grid"}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` starts a comment) into typed fields."""
    fields = {f.name: f for f in dataclasses.fields(TrainConfig)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in fields:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        out[key] = coerce(key, value)
    return out


def coerce(key: str, value):
    if not isinstance(value, str):
        return value
    if key in _LIST_KEYS:
        return tuple(float(v) if key == "tau_grid" else int(v) for v in value.replace(",", " ").split())
    if key in ("epochs", "batch_size", "p", "seed", "workers"):
        return int(value)
    if key in ("lr", "weight_decay", "lambda1", "lambda2"):
        return float(value)
    return value


def load_config(path=None, **overrides) -> TrainConfig:
    values = parse_config_text(Path(path).read_text()) if path else {}
    values.update({k: coerce(k, v) for k, v in overrides.items() if v is not None})
    return TrainConfig(**values)


@dataclass
class EpochRecord:
    epoch: int
    loss_total: float
    loss_o1: float
    loss_o2: float
    loss_o3: float
    val_acc: float
    seconds: float


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    tau: float = 0.0
    warnings: list[str] = field(default_factory=list)

    HEADER = "epoch,loss_total,loss_o1,loss_o2,loss_o3,val_acc,seconds"

    def to_csv(self) -> str:
        rows = [self.HEADER]
        for r in self.records:
            rows.append(",".join(repr(v) for v in dataclasses.astuple(r)))
        return "\n".join(rows) + "\n"

    @property
    def best_val_acc(self) -> float:
        accs = [r.val_acc for r in self.records if not np.isnan(r.val_acc)]
        return max(accs) if accs else float("nan")


@dataclass
class Prepared:
    """Normalized views of a dataset for one training run."""

    features: np.ndarray
    class_embeddings: np.ndarray
    xhat: np.ndarray
    feat_stats: tuple
    attr_stats: tuple
    train_ids: np.ndarray


def prepare(ds: Dataset) -> Prepared:
    train = ds.splits["train"]
    if train.size == 0:
        raise ValueError("the training split is empty")
    feat_stats = standardize_fit(ds.features[train])
    attr_stats = standardize_fit(ds.class_embeddings[ds.seen_classes])
    x = standardize_apply(ds.features, *feat_stats)
    y = standardize_apply(ds.class_embeddings, *attr_stats)
    zero = np.linalg.norm(x[train], axis=1) == 0.0
    if zero.any():
        log.warning("%d training samples are zero after normalization; skipped", int(zero.sum()))
    return Prepared(x, y, unit_rows(x), feat_stats, attr_stats, train[~zero])


def validation_accuracy(model: Checkpoint, ds: Dataset) -> float:
    """Per-class top-1 of validation samples against every seen class.

    Validation classes compete with the training classes, so a model that
    collapses held-out classes onto trained ones is penalized; a handful of
    validation classes alone saturates immediately.
    """
    idx = ds.splits["val"]
    if idx.size == 0:
        return float("nan")
    y = ds.labels[idx]
    pred = predict(model, ds.features[idx], ds.class_embeddings, ds.seen_classes)
    return per_class_top1(pred, y, np.unique(y))[1]


def _batch(prep: Prepared, mb) -> QuadBatch:
    x = prep.features

    def rows(idx):
        return np.where((idx >= 0)[:, None], x[np.maximum(idx, 0)], 0.0)

    return QuadBatch(
        y_r=prep.class_embeddings[mb.ref_class],
        x_i=x[mb.i],
        x_j=rows(mb.j),
        x_k=rows(mb.k),
        has_j=mb.j >= 0,
        has_k=mb.k >= 0,
        delta_j=mb.delta_j,
        delta_k=mb.delta_k,
    )


def _train_fixed_tau(ds: Dataset, cfg: TrainConfig, prep: Prepared):
    tau, _, _ = effective_settings(cfg.mode, cfg.tau, LossWeights(cfg.lambda1, cfg.lambda2))
    weights = LossWeights(cfg.lambda1, cfg.lambda2)
    table = build_similarity_table(prep.class_embeddings)
    index = build_class_index(ds.labels, table, tau, prep.train_ids)
    for w in index.warnings:
        log.warning(w)
    net = build_network(ds.attr_dim, ds.feat_dim, cfg.hidden, make_rng(cfg.seed, _INIT_STREAM))
    ckpt = Checkpoint(net, *prep.feat_stats, *prep.attr_stats, tau=float(tau))
    best = Checkpoint(net.copy(), *prep.feat_stats, *prep.attr_stats, tau=float(tau))
    log_ = TrainLog(tau=float(tau), warnings=list(index.warnings))
    opt = AdamState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    n_trainable = net.n_encoder_params() if cfg.mode is BaselineMode.B3_NO_RECONS else len(net.parameters())
    miner_cfg = MinerConfig(p=cfg.p, seed=cfg.seed, workers=cfg.workers)

    refs = prep.train_ids
    starts = np.arange(0, refs.size, cfg.batch_size)
    best_acc = -np.inf
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = make_rng(cfg.seed, _ORDER_STREAM, epoch).permutation(starts.size)
        sums = np.zeros(4)
        for s in starts[order]:
            batch_refs = refs[s:s + cfg.batch_size]
            fhat = unit_rows(encode(net, prep.class_embeddings)[0])
            mb = mine_batch(batch_refs, index, fhat, prep.xhat, miner_cfg, tau, epoch)
            loss, grads = loss_and_grad(_batch(prep, mb), net, weights, tau, cfg.mode)
            if not np.isfinite(loss.total):
                raise TrainingDiverged(f"objective is {loss.total} at epoch {epoch}")
            params = net.parameters()
            adam_step(params[:n_trainable], grads[:n_trainable], opt, net.decay_mask()[:n_trainable])
            sums += len(batch_refs) * np.array([loss.total, loss.o1, loss.o2, loss.o3])
        sums /= refs.size
        acc = validation_accuracy(ckpt, ds)
        log_.records.append(EpochRecord(epoch + 1, *map(float, sums), acc, time.perf_counter() - t0))
        # ties go to the later epoch: validation accuracy saturates early on small class sets
        if np.isnan(acc) or acc >= best_acc:
            best_acc = acc
            best = Checkpoint(net.copy(), *prep.feat_stats, *prep.attr_stats, tau=float(tau))
            log_.best_epoch = epoch + 1
        log.info("epoch %d loss %.5f val %.4f", epoch + 1, sums[0], acc)
    return best, log_


def train(ds: Dataset, cfg: TrainConfig):
    """Train and return (checkpoint of the best validation epoch, TrainLog).

    With ``tau = "auto"`` one model per ``tau_grid`` entry is trained and the
    one with the best validation accuracy is returned.
    """
    prep = prepare(ds)
    if cfg.tau != "auto":
        return _train_fixed_tau(ds, cfg, prep)
    if ds.splits["val"].size == 0:
        raise ValueError("tau = auto needs a validation split")
    runs = {}

    def evaluate(tau):
        runs[tau] = _train_fixed_tau(ds, cfg.replace(tau=tau), prep)
        return runs[tau][1].best_val_acc

    return runs[select_tau(cfg.tau_grid, evaluate)]


@dataclass
class GridResult:
    best: TrainConfig
    best_score: float
    cells: list[tuple[float, float, float, float]]

    def to_csv(self) -> str:
        rows = ["tau,lambda1,lambda2,val_acc"]
        rows += [",".join(repr(v) for v in cell) for cell in self.cells]
        return "\n".join(rows) + "\n"


def grid_search(ds: Dataset, cfg: TrainConfig, tau_grid, l1_grid, l2_grid) -> GridResult:
    """Full-factorial search on validation accuracy.

    Ties prefer the smaller lambda2, then the smaller lambda1, then the smaller tau.
    """
    if ds.splits["val"].size == 0:
        raise ValueError("grid search needs a validation split")
    grids = [sorted(float(v) for v in g) for g in (tau_grid, l1_grid, l2_grid)]
    if not all(grids):
        raise ValueError("every grid needs at least one value")
    prep = prepare(ds)
    cells, best, best_score = [], None, -np.inf
    for l2, l1, tau in itertools.product(grids[2], grids[1], grids[0]):
        run_cfg = cfg.replace(tau=tau, lambda1=l1, lambda2=l2)
        _, tlog = _train_fixed_tau(ds, run_cfg, prep)
        score = tlog.best_val_acc
        cells.append((tau, l1, l2, score))
        log.info("grid tau=%g l1=%g l2=%g -> %.4f", tau, l1, l2, score)
        if score > best_score:
            best, best_score = run_cfg, score
    cells.sort()
    return GridResult(best, best_score, cells)
