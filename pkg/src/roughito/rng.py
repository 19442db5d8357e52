"""Seed-deterministic counter-based random streams.

Every draw is addressed by ``(seed, key...)``. Replicas are grouped in blocks
of ``CHUNK`` and each block gets its own Philox substream, so the numbers a
replica sees do not depend on how many replicas were requested in total or on
the order blocks are produced in.
"""

from __future__ import annotations

import numpy as np

CHUNK = 256


def generator(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def normal_replicas(seed: int, key: tuple, count: int, shape: tuple, start: int = 0) -> np.ndarray:
    """Standard normals of shape ``(count,) + shape`` for replicas ``start..start+count-1``."""
    shape = tuple(shape)
    out = np.empty((count,) + shape)
    r = start
    stop = start + count
    while r < stop:
        block, offset = divmod(r, CHUNK)
        take = min(CHUNK - offset, stop - r)
        draws = generator(seed, *key, block).standard_normal((offset + take,) + shape)
        out[r - start:r - start + take] = draws[offset:]
        r += take
    return out


def pairwise_mean(x: np.ndarray, axis: int = 0) -> np.ndarray:
    """Mean along ``axis`` by a fixed pairwise summation tree."""
    x = np.moveaxis(np.asarray(x, dtype=float), axis, 0)
    n = x.shape[0]
    while x.shape[0] > 1:
        if x.shape[0] % 2:
            x = np.concatenate([x[:-2], x[-2:-1] + x[-1:]])
            continue
        x = x[0::2] + x[1::2]
    return x[0] / n


def mean_and_se(x: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    x = np.moveaxis(np.asarray(x, dtype=float), axis, 0)
    n = x.shape[0]
    m = pairwise_mean(x)
    if n < 2:
        return m, np.full_like(m, np.inf)
    sd = np.sqrt(pairwise_mean((x - m) ** 2) * n / (n - 1))
    return m, sd / np.sqrt(n)
