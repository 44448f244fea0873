"""Compare the compiled and numpy mining kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Sizes mirror one training batch: B references, p candidates per pool,
d-dimensional features (2048 matches ResNet-101 pooled features).
"""
import argparse
import timeit

import numpy as np

from semzsl import _pykernels

try:
    from semzsl import _ckernels
except ImportError:
    _ckernels = None

CASES = [  # (B, p, d, n_samples, n_classes)
    (64, 50, 64, 1000, 20),
    (64, 50, 2048, 5000, 50),
    (256, 50, 2048, 20000, 200),
]


def unit(m):
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def make_case(b, p, d, n, c, seed=0):
    r = np.random.default_rng(seed)
    fhat = unit(r.standard_normal((c, d)))
    xhat = unit(r.standard_normal((n, d)))
    ref = r.integers(0, c, b)
    cand = r.integers(0, n, (b, p))
    delta = r.uniform(-1, 1, (b, p))
    return fhat, xhat, ref, cand, delta


def bench(impl, args, repeat):
    t = timeit.Timer(lambda: (impl.select_hardest(*args, 0.0, 0), impl.select_hardest(*args, 0.0, 1)))
    n, _ = t.autorange()
    return min(t.repeat(repeat, n)) / n


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = [("numpy", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"{'B':>5} {'p':>4} {'d':>5}  " + "  ".join(f"{n:>12}" for n, _ in impls) + "  speedup")
    for case in CASES:
        data = make_case(*case)
        times = [bench(impl, data, args.repeat) for _, impl in impls]
        ref = [impl.select_hardest(*data, 0.0, 1)[0] for _, impl in impls]
        assert all(np.array_equal(ref[0], r) for r in ref), "backends disagree"
        speed = f"{times[0] / times[1]:7.2f}x" if len(times) > 1 else "    n/a"
        print(f"{case[0]:>5} {case[1]:>4} {case[2]:>5}  " + "  ".join(f"{t * 1e3:10.3f}ms" for t in times)
              + f"  {speed}")
    if _ckernels is None:
        print("compiled kernels not built; only the numpy backend was timed")


if __name__ == "__main__":
    main()
