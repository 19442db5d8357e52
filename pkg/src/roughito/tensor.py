"""Group elements of the truncated tensor algebra T^(n)(R^d).

Level ``k`` of an element is stored as a flat array of ``d**k`` entries in
row-major order, so the tensor product of two levels is the flattened outer
product. The array helpers (``mul_levels``, ``inv_levels``, ...) accept
arbitrary leading batch dimensions and are what the rest of the package uses
for Monte Carlo work; :class:`TruncatedTensor` wraps a single element.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError

#: Absolute tolerance used by :func:`allclose` for unit-scale elements.
DEFAULT_ATOL = 1e-12


def outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Flattened tensor product over the last axis, broadcasting batch axes."""
    out = a[..., :, None] * b[..., None, :]
    return out.reshape(out.shape[:-2] + (-1,))


def identity_levels(dim: int, depth: int, batch: tuple = ()) -> list[np.ndarray]:
    return [np.zeros(batch + (dim**k,)) for k in range(1, depth + 1)]


def mul_levels(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Product of two group elements given as level lists (scalar part 1)."""
    n = len(a)
    out = []
    for k in range(1, n + 1):
        acc = a[k - 1] + b[k - 1]
        for j in range(1, k):
            acc = acc + outer(a[j - 1], b[k - j - 1])
        out.append(acc)
    return out


def _series(x: Sequence[np.ndarray], coeffs: Sequence[float]) -> list[np.ndarray]:
    # sum_{j>=1} coeffs[j-1] * x^{(x)j}, truncated; x has zero scalar part
    n = len(x)
    power = list(x)
    out = [coeffs[0] * lvl for lvl in power]
    for j in range(2, n + 1):
        nxt = [None] * n
        for k in range(1, n + 1):
            if k < j:
                nxt[k - 1] = np.zeros_like(x[k - 1])
                continue
            acc = None
            # level k of power^{(j)} = sum_i power^{(j-1)}_i (x) x_{k-i}, i >= j-1
            for i in range(j - 1, k):
                term = outer(power[i - 1], x[k - i - 1])
                acc = term if acc is None else acc + term
            nxt[k - 1] = acc
        power = nxt
        c = coeffs[j - 1]
        for k in range(j, n + 1):
            out[k - 1] = out[k - 1] + c * power[k - 1]
    return out


def inv_levels(g: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Inverse as the alternating sum of tensor powers of ``g - 1``."""
    n = len(g)
    return _series(g, [(-1.0) ** j for j in range(1, n + 1)])


def exp_levels(x: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Truncated tensor exponential of an element with zero scalar part."""
    n = len(x)
    return _series(x, [1.0 / factorial(j) for j in range(1, n + 1)])


def log_levels(g: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Truncated tensor logarithm of a group element."""
    n = len(g)
    return _series(g, [(-1.0) ** (j + 1) / j for j in range(1, n + 1)])


def truncate_levels(g: Sequence[np.ndarray], depth: int, dim: int) -> list[np.ndarray]:
    """Project to a lower depth, or pad with zero levels to a higher one."""
    g = list(g)
    if depth <= len(g):
        return g[:depth]
    batch = g[0].shape[:-1]
    return g + [np.zeros(batch + (dim**k,)) for k in range(len(g) + 1, depth + 1)]


def level_norms(g: Sequence[np.ndarray]) -> list[np.ndarray]:
    return [np.sqrt(np.sum(lvl * lvl, axis=-1)) for lvl in g]


def homogeneous_norm_levels(g: Sequence[np.ndarray]) -> np.ndarray:
    total = 0.0
    for k, nrm in enumerate(level_norms(g), start=1):
        total = total + nrm ** (1.0 / k)
    return total


@dataclass(frozen=True, eq=False)
class TruncatedTensor:
    """A group element (scalar part 1) of T^(depth)(R^dim)."""

    dim: int
    depth: int
    levels: tuple

    def __post_init__(self):
        if self.dim < 1 or self.depth < 1:
            raise InvalidArgumentError("dim and depth must be >= 1")
        if len(self.levels) != self.depth:
            raise InvalidArgumentError(
                f"expected {self.depth} levels, got {len(self.levels)}")
        frozen = []
        for k, lvl in enumerate(self.levels, start=1):
            arr = np.array(lvl, dtype=float).reshape(-1)
            if arr.size != self.dim**k:
                raise InvalidArgumentError(
                    f"level {k} must hold {self.dim**k} entries, got {arr.size}")
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError(f"level {k} has non-finite entries")
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "levels", tuple(frozen))

    @classmethod
    def identity(cls, dim: int, depth: int) -> "TruncatedTensor":
        return cls(dim, depth, tuple(identity_levels(dim, depth)))

    @classmethod
    def from_levels(cls, levels: Sequence) -> "TruncatedTensor":
        levels = [np.asarray(lvl, dtype=float).reshape(-1) for lvl in levels]
        if not levels:
            raise InvalidArgumentError("need at least one level")
        return cls(int(levels[0].size), len(levels), tuple(levels))

    def level(self, k: int) -> np.ndarray:
        """Level ``k`` reshaped to a ``(dim,)*k`` tensor (level 0 is 1.0)."""
        if k == 0:
            return np.array(1.0)
        if not 1 <= k <= self.depth:
            raise InvalidArgumentError(f"level {k} outside 0..{self.depth}")
        return self.levels[k - 1].reshape((self.dim,) * k)

    def __matmul__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        return tensor_mul(self, other)

    def __repr__(self):
        return f"TruncatedTensor(dim={self.dim}, depth={self.depth}, levels={[l.tolist() for l in self.levels]})"


@dataclass(frozen=True)
class Decomposition:
    """Weakly geometric part plus symmetric drift of a depth-2 element."""

    geometric: TruncatedTensor
    drift: np.ndarray

    def recombine(self) -> TruncatedTensor:
        x = self.geometric.levels[0]
        a = self.geometric.level(2)
        anti = 0.5 * (a - a.T)
        level2 = anti + self.drift + 0.5 * np.outer(x, x)
        return TruncatedTensor.from_levels([x, level2])


def _check_pair(g: TruncatedTensor, h: TruncatedTensor):
    if g.dim != h.dim or g.depth != h.depth:
        raise InvalidArgumentError(
            f"mismatched elements: (dim={g.dim}, depth={g.depth}) vs "
            f"(dim={h.dim}, depth={h.depth})")


def tensor_mul(g: TruncatedTensor, h: TruncatedTensor) -> TruncatedTensor:
    _check_pair(g, h)
    return TruncatedTensor(g.dim, g.depth, tuple(mul_levels(g.levels, h.levels)))


def tensor_inv(g: TruncatedTensor) -> TruncatedTensor:
    return TruncatedTensor(g.dim, g.depth, tuple(inv_levels(g.levels)))


def homogeneous_norm(g: TruncatedTensor) -> float:
    """Sum over levels of the Frobenius norm of level k raised to 1/k."""
    return float(homogeneous_norm_levels(g.levels))


def dilate(g: TruncatedTensor, c: float) -> TruncatedTensor:
    """Scale level k by c**k."""
    return TruncatedTensor(
        g.dim, g.depth, tuple(c**k * lvl for k, lvl in enumerate(g.levels, start=1)))


def tensor_exp(x: Sequence, dim: int, depth: int) -> TruncatedTensor:
    """Exponential of a Lie-algebra-like element given by its levels.

    ``x`` may have fewer than ``depth`` levels; missing ones are zero.
    """
    lv = truncate_levels([np.asarray(l, dtype=float).reshape(-1) for l in x], depth, dim)
    return TruncatedTensor(dim, depth, tuple(exp_levels(lv)))


def tensor_log(g: TruncatedTensor) -> list[np.ndarray]:
    return log_levels(g.levels)


def decompose_geo_drift(g: TruncatedTensor) -> Decomposition:
    if g.depth != 2:
        raise InvalidArgumentError("decomposition is defined for depth-2 elements")
    x = g.levels[0]
    a = g.level(2)
    half_sq = 0.5 * np.outer(x, x)
    geo = TruncatedTensor.from_levels([x, 0.5 * (a - a.T) + half_sq])
    drift = 0.5 * (a + a.T) - half_sq
    return Decomposition(geo, drift)


def allclose(g: TruncatedTensor, h: TruncatedTensor, atol: float = DEFAULT_ATOL) -> bool:
    _check_pair(g, h)
    return all(np.allclose(a, b, rtol=0.0, atol=atol) for a, b in zip(g.levels, h.levels))


def max_abs_diff(g: TruncatedTensor, h: TruncatedTensor) -> float:
    _check_pair(g, h)
    return max(float(np.max(np.abs(a - b))) for a, b in zip(g.levels, h.levels))
