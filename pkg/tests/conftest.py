import itertools

import numpy as np
import pytest


def shuffles(u, v):
    """All interleavings of the words u and v (with multiplicity)."""
    n = len(u) + len(v)
    out = []
    for pos in itertools.combinations(range(n), len(u)):
        w, iu, iv = [], 0, 0
        for k in range(n):
            if iu < len(u) and k == pos[iu]:
                w.append(u[iu])
                iu += 1
            else:
                w.append(v[iv])
                iv += 1
        out.append(tuple(w))
    return out


def coeff(levels, word, d):
    if not word:
        return 1.0
    idx = 0
    for a in word:
        idx = idx * d + a
    return float(levels[len(word) - 1][idx])


def all_partitions_sup(values, power, weight):
    """Brute force sup over every sub-partition of the index set (keeps both ends)."""
    n = len(values)
    best = 0.0
    inner = range(1, n - 1)
    for r in range(n - 1):
        for mid in itertools.combinations(inner, r):
            pts = (0,) + mid + (n - 1,)
            best = max(best, sum(weight(i, j) ** power for i, j in zip(pts[:-1], pts[1:])))
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
