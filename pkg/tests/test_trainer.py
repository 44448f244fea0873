import dataclasses

import numpy as np
import pytest

from semzsl.data import Dataset
from semzsl.model import checkpoint_bytes
from semzsl.objectives import BaselineMode
from semzsl.trainer import (
    TrainConfig, TrainingDiverged, grid_search, load_config, parse_config_text, prepare, train,
)

FAST = TrainConfig(epochs=3, batch_size=8, hidden=(16,), p=5, seed=1)


def _fingerprint(tlog):
    return [dataclasses.replace(r, seconds=0.0) for r in tlog.records], tlog.best_epoch


def test_zero_epochs_returns_initial_model(small_synth):
    ckpt, tlog = train(small_synth, FAST.replace(epochs=0))
    assert tlog.records == []
    again, _ = train(small_synth, FAST.replace(epochs=0))
    assert checkpoint_bytes(ckpt) == checkpoint_bytes(again)


def test_training_is_deterministic(small_synth):
    a, la = train(small_synth, FAST)
    b, lb = train(small_synth, FAST)
    assert checkpoint_bytes(a) == checkpoint_bytes(b)
    assert _fingerprint(la) == _fingerprint(lb)
    c, _ = train(small_synth, FAST.replace(workers=3))
    assert checkpoint_bytes(a) == checkpoint_bytes(c)


def test_loss_decreases(small_synth):
    _, tlog = train(small_synth, FAST.replace(epochs=8))
    assert tlog.records[-1].loss_total < tlog.records[0].loss_total
    assert all(np.isfinite(r.loss_total) for r in tlog.records)
    assert tlog.to_csv().splitlines()[0] == tlog.HEADER


def test_normalization_ignores_test_data(small_synth):
    ds = small_synth
    feats = ds.features.copy()
    feats[ds.splits["test_unseen"]] += 100.0
    shifted = Dataset(feats, ds.labels, ds.class_embeddings, ds.class_names, ds.splits)
    a, b = prepare(ds), prepare(shifted)
    np.testing.assert_array_equal(a.feat_stats[0], b.feat_stats[0])
    np.testing.assert_array_equal(a.attr_stats[1], b.attr_stats[1])


def test_b3_keeps_decoder_at_initialization(small_synth):
    init, _ = train(small_synth, FAST.replace(epochs=0, mode="b3"))
    trained, _ = train(small_synth, FAST.replace(mode="b3"))
    n = trained.net.n_encoder_params()
    for p, q in zip(init.net.parameters()[n:], trained.net.parameters()[n:]):
        np.testing.assert_array_equal(p, q)
    assert not np.array_equal(init.net.parameters()[0], trained.net.parameters()[0])


def test_b2_stores_tau_one(small_synth):
    ckpt, tlog = train(small_synth, FAST.replace(epochs=1, mode="b2"))
    assert ckpt.tau == 1.0 and tlog.tau == 1.0


def test_divergence_raises(small_synth):
    with pytest.raises(TrainingDiverged), np.errstate(all="ignore"):
        train(small_synth, FAST.replace(lr=1e300, epochs=2))


def test_auto_tau_picks_from_grid(small_synth):
    _, tlog = train(small_synth, FAST.replace(epochs=1, tau="auto", tau_grid=(-0.1, 0.1)))
    assert tlog.tau in (-0.1, 0.1)


def test_grid_search_ties_prefer_small_values(small_synth, monkeypatch):
    import semzsl.trainer as tr

    def fake(ds, cfg, prep):
        log = tr.TrainLog(tau=cfg.tau)
        log.records.append(tr.EpochRecord(1, 0, 0, 0, 0, 0.5, 0))
        return None, log

    monkeypatch.setattr(tr, "_train_fixed_tau", fake)
    res = grid_search(small_synth, FAST, [0.1, -0.1], [2.0, 1.0], [3.0, 0.5])
    assert (res.best.tau, res.best.lambda1, res.best.lambda2) == (-0.1, 1.0, 0.5)
    assert len(res.cells) == 8 and res.to_csv().startswith("tau,lambda1,lambda2,val_acc\n")


def test_config_text_roundtrip(tmp_path):
    cfg = TrainConfig(epochs=7, tau=-0.1, hidden=(32, 64), mode="b1", lambda1=0.25)
    path = tmp_path / "c.cfg"
    path.write_text("# comment\n" + cfg.to_text())
    assert load_config(path) == cfg
    assert load_config(path, epochs=2, tau="auto").tau == "auto"


def test_config_errors():
    with pytest.raises(ValueError, match="unknown key"):
        parse_config_text("epoch = 3")
    with pytest.raises(ValueError):
        parse_config_text("epochs 3")
    with pytest.raises(ValueError):
        TrainConfig(tau=1.5)
    with pytest.raises(ValueError):
        TrainConfig(lambda1=-1)
    assert TrainConfig(mode="b3").mode is BaselineMode.B3_NO_RECONS
