import numpy as np
import pytest

from helpers import brute_cosine, brute_per_class
from semzsl.data import Dataset
from semzsl.evaluator import (
    EvalReport, class_scores, evaluate, evaluate_conventional, evaluate_generalized, harmonic_mean,
    per_class_top1, predict, topk_accuracy,
)
from semzsl.model import Checkpoint, build_network, encode
from semzsl.numkit import make_rng
from semzsl.relations import DegenerateVectorError


def _ckpt(a, d, seed=0):
    return Checkpoint(build_network(a, d, [6], make_rng(seed)), np.zeros(d), np.ones(d),
                      np.zeros(a), np.ones(a), 0.0)


def test_predict_matches_brute_force(rng):
    ck = _ckpt(4, 5)
    emb = rng.standard_normal((6, 4))
    x = rng.standard_normal((10, 5))
    cands = [1, 3, 4]
    f = encode(ck.net, emb)[0]
    expect = [max(cands, key=lambda c: (brute_cosine(row, f[c]), -c)) for row in x]
    assert predict(ck, x, emb, cands).tolist() == expect


def test_stored_statistics_are_applied(rng):
    ck = _ckpt(3, 4)
    ck.feat_mean, ck.feat_std = rng.standard_normal(4), rng.random(4) + 0.5
    emb, x = rng.standard_normal((3, 3)), rng.standard_normal((2, 4))
    s, _ = class_scores(ck, x, emb, [0, 1, 2])
    f = encode(ck.net, emb)[0]
    xn = (x - ck.feat_mean) / ck.feat_std
    assert s[1, 2] == pytest.approx(brute_cosine(xn[1], f[2]), abs=1e-12)


def test_per_class_top1_examples():
    acc, mean = per_class_top1([0, 0, 1, 1, 1], [0, 0, 0, 1, 1], [0, 1])
    assert acc == {0: 2 / 3, 1: 1.0} and mean == pytest.approx(5 / 6)
    # a class without samples is excluded
    _, mean = per_class_top1([0], [0], [0, 1])
    assert mean == 1.0


def test_per_class_matches_brute(rng):
    for _ in range(20):
        y = rng.integers(0, 5, 30)
        p = rng.integers(0, 5, 30)
        assert per_class_top1(p, y, range(5))[1] == pytest.approx(brute_per_class(p, y, range(5)), abs=1e-12)


def test_harmonic_mean():
    assert harmonic_mean(0.2, 0.6) == pytest.approx(0.30, abs=1e-12)
    assert harmonic_mean(0.0, 0.0) == 0.0
    assert harmonic_mean(1.0, 0.0) == 0.0


def test_degenerate_inputs():
    ck = _ckpt(2, 3)
    with pytest.raises(DegenerateVectorError):
        class_scores(ck, np.zeros((1, 3)), np.ones((2, 2)), [0, 1])
    for p in ck.net.parameters():
        p[...] = 0
    with pytest.raises(DegenerateVectorError):
        class_scores(ck, np.ones((1, 3)), np.ones((2, 2)), [0, 1])


def test_bad_candidate_sets():
    ck = _ckpt(2, 3)
    with pytest.raises(ValueError):
        predict(ck, np.ones((1, 3)), np.ones((2, 2)), [])
    with pytest.raises(KeyError):
        predict(ck, np.ones((1, 3)), np.ones((2, 2)), [0, 5])


def test_topk_ties_and_bounds():
    ck = _ckpt(2, 2)
    for p in ck.net.parameters():
        p[...] = 0
    ck.net.encoder[-1].bias[:] = 1.0  # every class maps to the same output
    emb = np.eye(2)
    x = np.ones((2, 2))
    assert topk_accuracy(ck, x, [0, 0], emb, [0, 1], 1) == 1.0
    assert topk_accuracy(ck, x, [1, 1], emb, [0, 1], 1) == 0.0
    assert topk_accuracy(ck, x, [1, 1], emb, [0, 1], 2) == 1.0
    with pytest.raises(ValueError):
        topk_accuracy(ck, x, [1, 1], emb, [0, 1], 3)


def _toy_ds(seed=0):
    r = np.random.default_rng(seed)
    labels = np.repeat(np.arange(5), 4)
    splits = {"train": [0, 1, 4, 5, 8, 9], "test_seen": [2, 3, 6, 7, 10, 11], "test_unseen": list(range(12, 20))}
    return Dataset(r.standard_normal((20, 3)), labels, r.standard_normal((5, 2)), list("abcde"), splits)


def test_generalized_restricted_equals_conventional():
    ds = _toy_ds()
    ck = _ckpt(2, 3, seed=4)
    ts, tr, h, _, _ = evaluate_generalized(ck, ds, classes=ds.unseen_classes)
    _, conv = evaluate_conventional(ck, ds)
    assert ts == conv
    assert h == harmonic_mean(ts, tr)


def test_report_files(tmp_path):
    ds = _toy_ds()
    rep = evaluate(_ckpt(2, 3), ds, generalized=True, topk=[1, 2])
    rep.write(tmp_path / "r.txt", ds.class_names)
    text = (tmp_path / "r.txt").read_text()
    assert "zsl_acc = " in text and "harmonic = " in text and "top2_acc = " in text
    csv = (tmp_path / "r.txt.csv").read_text().splitlines()
    assert csv[0] == "class,name,pool,accuracy" and len(csv) == 1 + 2 + 3
    assert rep.topk[1] == rep.zsl_acc
    assert EvalReport().to_text() == "\n"
