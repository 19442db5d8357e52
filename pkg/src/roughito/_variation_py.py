"""Numpy fallback for the p-variation dynamic programme.

Each kernel returns ``max over grid sub-partitions of sum w(i, j)**power``
where ``w`` is an increment size. The recursion is
``best[j] = max_{i<j} best[i] + w(i, j)**power``; the inner maximum is
vectorised over ``i``.
"""

import numpy as np


def _run(n, weights_to):
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = np.max(best[:j] + weights_to(j))
    return float(best[-1])


def sup_sum_vector(x, power):
    x = np.ascontiguousarray(x, dtype=float)
    return _run(x.shape[0], lambda j: np.sqrt(np.sum((x[j] - x[:j]) ** 2, axis=1)) ** power)


def _depth2_increments(x1, x2, j):
    d = x1.shape[1]
    dx = x1[j] - x1[:j]
    da = x2[j] - x2[:j] - (x1[:j, :, None] * dx[:, None, :]).reshape(j, d * d)
    return dx, da


def sup_sum_depth2(x1, x2, power, mode):
    """mode 0: homogeneous norm, 1: level 1 only, 2: level 2 only."""
    x1 = np.ascontiguousarray(x1, dtype=float)
    x2 = np.ascontiguousarray(x2, dtype=float)

    def w(j):
        dx, da = _depth2_increments(x1, x2, j)
        n1 = np.sqrt(np.sum(dx * dx, axis=1))
        n2 = np.sqrt(np.sum(da * da, axis=1))
        if mode == 1:
            return n1**power
        if mode == 2:
            return n2**power
        return (n1 + np.sqrt(n2)) ** power

    return _run(x1.shape[0], w)


def sup_sum_level2_diff(x1, x2, y1, y2, power):
    x1, x2, y1, y2 = (np.ascontiguousarray(a, dtype=float) for a in (x1, x2, y1, y2))

    def w(j):
        _, da = _depth2_increments(x1, x2, j)
        _, db = _depth2_increments(y1, y2, j)
        return np.sqrt(np.sum((da - db) ** 2, axis=1)) ** power

    return _run(x1.shape[0], w)
