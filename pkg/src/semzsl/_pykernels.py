"""numpy implementations of the mining kernels (fallback for ``_ckernels``)."""
import numpy as np

KIND_SIMILAR = 0
KIND_DISSIMILAR = 1


def pair_cosines(fhat, xhat, f_rows, x_rows):
    """Dot products of unit rows ``fhat[f_rows[b]]`` and ``xhat[x_rows[b]]``."""
    f_rows = np.asarray(f_rows, dtype=np.int64)
    x_rows = np.asarray(x_rows, dtype=np.int64)
    s = np.einsum("ij,ij->i", fhat[f_rows], xhat[x_rows])
    return np.clip(s, -1.0, 1.0)


def select_hardest(fhat, xhat, ref_class, cand, cand_delta, tau, kind):
    """Pick, per row of ``cand``, the candidate with the largest mining score.

    kind 0 scores ``[tau - s]_+ + [s - delta]_+`` (similar pool), kind 1 scores
    ``(tau - delta) * s`` (dissimilar pool). Rows whose first candidate is -1
    have no pool and yield -1. Ties go to the earliest candidate.
    """
    cand = np.asarray(cand, dtype=np.int64)
    b, p = cand.shape
    choice = np.full(b, -1, dtype=np.int64)
    best = np.full(b, np.nan)
    rows = np.flatnonzero(cand[:, 0] >= 0)
    if rows.size == 0 or p == 0:
        return choice, best
    c = cand[rows]
    f = fhat[np.asarray(ref_class, dtype=np.int64)[rows]]
    s = np.clip(np.einsum("bd,bpd->bp", f, xhat[c]), -1.0, 1.0)
    delta = np.asarray(cand_delta, dtype=np.float64)[rows]
    if kind == KIND_SIMILAR:
        score = np.maximum(tau - s, 0.0) + np.maximum(s - delta, 0.0)
    else:
        score = (tau - delta) * s
    arg = np.argmax(score, axis=1)
    choice[rows] = c[np.arange(rows.size), arg]
    best[rows] = score[np.arange(rows.size), arg]
    return choice, best
