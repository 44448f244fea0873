"""Independent oracles shared by the unit and acceptance tests."""
import numpy as np

from semzsl.model import build_network
from semzsl.objectives import LossWeights, QuadBatch, loss_total


def random_problem(seed, a=4, hidden=(5,), d=6, batch=5):
    r = np.random.default_rng(seed)
    net = build_network(a, d, hidden, r)
    for layer in net.layers():  # nonzero biases exercise every gradient path
        layer.bias[:] = 0.1 * r.standard_normal(layer.bias.shape)
    tau = float(r.uniform(-0.5, 0.5))
    has_j = r.random(batch) < 0.7
    has_k = r.random(batch) < 0.7
    has_j[0] = has_k[0] = True
    qb = QuadBatch(
        y_r=r.standard_normal((batch, a)),
        x_i=r.standard_normal((batch, d)),
        x_j=np.where(has_j[:, None], r.standard_normal((batch, d)), 0.0),
        x_k=np.where(has_k[:, None], r.standard_normal((batch, d)), 0.0),
        has_j=has_j,
        has_k=has_k,
        delta_j=np.where(has_j, r.uniform(tau, 1.0, batch), np.nan),
        delta_k=np.where(has_k, r.uniform(-1.0, tau, batch), np.nan),
    )
    weights = LossWeights(float(r.uniform(0.1, 2.0)), float(r.uniform(0.1, 2.0)))
    return net, qb, weights, tau


def central_difference(net, batch, weights, tau, mode, h=1e-6):
    grads = []
    for p in net.parameters():
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = loss_total(batch, net, weights, tau, mode).total
            flat[idx] = orig - h
            down = loss_total(batch, net, weights, tau, mode).total
            flat[idx] = orig
            gflat[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def gradient_rel_error(analytic, numeric):
    """Max over parameter arrays of ||a - n|| / max(||a||, ||n||).

    Arrays whose gradients are both ~0 contribute their absolute error.
    """
    worst = 0.0
    for a, n in zip(analytic, numeric):
        scale = max(np.linalg.norm(a), np.linalg.norm(n))
        err = np.linalg.norm(a - n)
        worst = max(worst, err / scale if scale > 1e-8 else err)
    return worst


def brute_cosine(p, q):
    p = [float(v) for v in p]
    q = [float(v) for v in q]
    dot = sum(x * y for x, y in zip(p, q))
    return dot / (sum(x * x for x in p) ** 0.5 * sum(y * y for y in q) ** 0.5)


def brute_per_class(pred, labels, classes):
    accs = []
    for c in classes:
        idx = [n for n, l in enumerate(labels) if l == c]
        if idx:
            accs.append(sum(1 for n in idx if pred[n] == c) / len(idx))
    return sum(accs) / len(accs)


# criterion number -> (passed, detail); filled by test_acceptance, printed by conftest
ACCEPTANCE = {}
