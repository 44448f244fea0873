import numpy as np
import pytest

from semzsl.inference import format_table, semantic_report, to_csv
from semzsl.model import Checkpoint, build_network
from semzsl.numkit import make_rng


def _ckpt(a=3, d=4):
    return Checkpoint(build_network(a, d, [5], make_rng(1)), np.zeros(d), np.ones(d), np.zeros(a), np.ones(a), 0.0)


def test_report_order_and_tags(rng):
    ck = _ckpt()
    emb = rng.standard_normal((6, 3))
    entries = semantic_report(ck, rng.standard_normal(4), emb, [0, 2, 3, 5], tau=0.1, names=list("abcdef"))
    scores = [e.score for e in entries]
    assert scores == sorted(scores, reverse=True)
    assert {e.class_id for e in entries} == {0, 2, 3, 5}
    for e in entries:
        assert e.tag == ("similar" if e.score >= 0.1 else "dissimilar")
        assert -1 <= e.score <= 1 and e.name == "abcdef"[e.class_id]


def test_ties_by_class_id_and_top():
    ck = _ckpt(2, 2)
    for p in ck.net.parameters():
        p[...] = 0
    ck.net.encoder[-1].bias[:] = 1.0
    entries = semantic_report(ck, np.ones(2), np.eye(3, 2), [2, 0, 1], top=2)
    assert [e.class_id for e in entries] == [0, 1]
    assert all(e.score == pytest.approx(1.0) for e in entries)


def test_output_formats(rng):
    entries = semantic_report(_ckpt(), rng.standard_normal(4), rng.standard_normal((3, 3)), [0, 1, 2])
    lines = to_csv(entries).splitlines()
    assert lines[0] == "class,score,tag" and len(lines) == 4
    assert format_table(entries).splitlines()[0].split() == ["class", "score", "tag"]


def test_missing_class_embedding():
    with pytest.raises(KeyError):
        semantic_report(_ckpt(), np.ones(4), np.ones((2, 3)), [0, 4])
