"""NumPy implementations of the pairwise r_W kernels (blocked, no n^2 temporaries)."""

import numpy as np


def pairwise_l1(kernel, weights, rows_a, rows_b, block=64):
    """r[a, b] = sum_k weights[k] * |kernel[rows_a[a], k] - kernel[rows_b[b], k]|."""
    kernel = np.ascontiguousarray(kernel)
    weights = np.asarray(weights)
    sub_b = kernel[rows_b]
    out = np.empty((len(rows_a), len(rows_b)))
    for s in range(0, len(rows_a), block):
        rows = kernel[rows_a[s : s + block]]
        out[s : s + block] = np.abs(rows[:, None, :] - sub_b[None, :, :]) @ weights
    return out


def twin_pairs(kernel, weights, eps, block=64):
    """All index pairs i < j with r_W(i, j) < eps, with their distances."""
    kernel = np.ascontiguousarray(kernel)
    weights = np.asarray(weights)
    n = kernel.shape[0]
    found = []
    for s in range(0, n, block):
        rows = kernel[s : s + block]
        d = np.abs(rows[:, None, :] - kernel[None, :, :]) @ weights
        ii, jj = np.nonzero(d < eps)
        for a, j in zip(ii, jj):
            i = s + a
            if i < j:
                found.append((i, j, float(d[a, j])))
    return found


def min_pair_distance(kernel, weights, block=64):
    """Smallest off-diagonal r_W distance and its index pair."""
    kernel = np.ascontiguousarray(kernel)
    weights = np.asarray(weights)
    n = kernel.shape[0]
    best = (np.inf, -1, -1)
    for s in range(0, n, block):
        rows = kernel[s : s + block]
        d = np.abs(rows[:, None, :] - kernel[None, :, :]) @ weights
        for a in range(d.shape[0]):
            d[a, s + a] = np.inf
        a, j = np.unravel_index(np.argmin(d), d.shape)
        if d[a, j] < best[0]:
            best = (float(d[a, j]), s + int(a), int(j))
    return best
