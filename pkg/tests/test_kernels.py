import numpy as np
import pytest

from semzsl import _pykernels, kernels

try:
    from semzsl import _ckernels
except ImportError:  # pragma: no cover - extension not built
    _ckernels = None

BACKENDS = [_pykernels] + ([_ckernels] if _ckernels else [])


def _unit(m):
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def _setup(seed, n_cls=6, n=40, d=5, b=12, p=7):
    r = np.random.default_rng(seed)
    fhat = _unit(r.standard_normal((n_cls, d)))
    xhat = _unit(r.standard_normal((n, d)))
    ref = r.integers(0, n_cls, b)
    cand = r.integers(0, n, (b, p))
    cand[0] = -1  # one row without a pool
    delta = np.where(cand >= 0, r.uniform(-1, 1, (b, p)), np.nan)
    return fhat, xhat, ref, cand, delta


def _brute(fhat, xhat, ref, cand, delta, tau, kind):
    out = []
    for b in range(cand.shape[0]):
        if cand[b, 0] < 0:
            out.append(-1)
            continue
        best, pick = -np.inf, -1
        for q in range(cand.shape[1]):
            s = float(fhat[ref[b]] @ xhat[cand[b, q]])
            if kind == 0:
                v = max(tau - s, 0.0) + max(s - delta[b, q], 0.0)
            else:
                v = (tau - delta[b, q]) * s
            if v > best:
                best, pick = v, cand[b, q]
        out.append(pick)
    return np.array(out)


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "numpy")


@pytest.mark.parametrize("impl", BACKENDS)
@pytest.mark.parametrize("kind", [0, 1])
@pytest.mark.parametrize("seed", range(4))
def test_select_hardest_matches_brute_force(impl, kind, seed):
    args = _setup(seed)
    choice, best = impl.select_hardest(*args, 0.1, kind)
    np.testing.assert_array_equal(choice, _brute(*args, 0.1, kind))
    assert choice[0] == -1 and np.isnan(best[0])


@pytest.mark.parametrize("impl", BACKENDS)
def test_ties_pick_earliest_candidate(impl):
    fhat = np.array([[1.0, 0.0]])
    xhat = np.array([[0.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    cand = np.array([[1, 0, 2]])
    delta = np.array([[-0.5, -0.5, 0.5]])
    choice, _ = impl.select_hardest(fhat, xhat, np.array([0]), cand, delta, 0.0, 1)
    assert choice[0] == 1


@pytest.mark.parametrize("impl", BACKENDS)
def test_pair_cosines(impl):
    fhat, xhat, *_ = _setup(9)
    fr, xr = np.array([0, 3, 5]), np.array([1, 2, 39])
    expect = [fhat[a] @ xhat[b] for a, b in zip(fr, xr)]
    np.testing.assert_allclose(impl.pair_cosines(fhat, xhat, fr, xr), expect, atol=1e-15)


@pytest.mark.skipif(_ckernels is None, reason="compiled kernels unavailable")
@pytest.mark.parametrize("kind", [0, 1])
def test_backends_agree_exactly(kind):
    args = _setup(21, n_cls=20, n=500, d=32, b=64, p=50)
    a, sa = _pykernels.select_hardest(*args, -0.1, kind)
    b, sb = _ckernels.select_hardest(*args, -0.1, kind)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(sa, sb, atol=1e-12)


def test_environment_forces_numpy_backend():
    import os
    import subprocess
    import sys

    env = dict(os.environ, SEMZSL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from semzsl import kernels; print(kernels.BACKEND)"],
                         capture_output=True, text=True, env=env)
    assert out.stdout.strip() == "numpy"
