"""Grid-sampled paths, depth-2 rough paths and signature paths.

All path containers are immutable: arrays are copied on construction and
flagged read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError
from .tensor import (
    TruncatedTensor,
    exp_levels,
    inv_levels,
    mul_levels,
    outer,
    truncate_levels,
)


def _frozen(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _check_times(times: np.ndarray):
    if times.ndim != 1 or times.size < 1:
        raise InvalidArgumentError("times must be a non-empty 1-d array")
    if not np.all(np.isfinite(times)):
        raise InvalidArgumentError("times must be finite")
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise InvalidArgumentError("times must be strictly increasing")


@dataclass(frozen=True, eq=False)
class GridPath:
    """A path in R^d sampled at strictly increasing times.

    ``values`` has shape ``(N+1, d)``; a 1-d array is read as a scalar path.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = _frozen(self.times)
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise InvalidArgumentError("values must have shape (N+1, d)")
        _check_times(times)
        if values.shape[0] != times.size:
            raise InvalidArgumentError(
                f"{times.size} times but {values.shape[0]} values")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("values must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", _frozen(values))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.times.size

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def shifted(self) -> "GridPath":
        """The same path started at the origin."""
        return GridPath(self.times, self.values - self.values[0])


@dataclass(frozen=True, eq=False)
class RoughPathGrid:
    """Depth-2 group values gamma_{t_i} on a grid, starting at the identity.

    ``level1`` has shape ``(N+1, d)`` and ``level2`` shape ``(N+1, d, d)``.
    """

    times: np.ndarray
    level1: np.ndarray
    level2: np.ndarray

    def __post_init__(self):
        times = _frozen(self.times)
        _check_times(times)
        l1 = np.array(self.level1, dtype=float)
        if l1.ndim == 1:
            l1 = l1[:, None]
        d = l1.shape[1]
        l2 = np.array(self.level2, dtype=float).reshape(l1.shape[0], d, d)
        if l1.shape[0] != times.size:
            raise InvalidArgumentError("level arrays must match the time grid")
        if not (np.all(np.isfinite(l1)) and np.all(np.isfinite(l2))):
            raise InvalidArgumentError("rough path values must be finite")
        if np.max(np.abs(l1[0]), initial=0.0) > 1e-12 or np.max(np.abs(l2[0]), initial=0.0) > 1e-12:
            raise InvalidArgumentError("a rough path grid must start at the identity")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "level1", _frozen(l1))
        object.__setattr__(self, "level2", _frozen(l2))

    @property
    def dim(self) -> int:
        return self.level1.shape[1]

    def __len__(self):
        return self.times.size

    def element(self, i: int) -> TruncatedTensor:
        return TruncatedTensor.from_levels([self.level1[i], self.level2[i]])

    @property
    def elements(self) -> list[TruncatedTensor]:
        return [self.element(i) for i in range(len(self))]

    def increments(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-step increments gamma_{t_k}^{-1} (x) gamma_{t_{k+1}}."""
        x, a = self.level1, self.level2
        dx = np.diff(x, axis=0)
        da = np.diff(a, axis=0) - x[:-1, :, None] * dx[:, None, :]
        return dx, da

    def increment(self, i: int, j: int) -> TruncatedTensor:
        x, a = self.level1, self.level2
        dx = x[j] - x[i]
        return TruncatedTensor.from_levels([dx, a[j] - a[i] - np.outer(x[i], dx)])

    def window(self, i: int, j: int) -> "RoughPathGrid":
        """The path restricted to grid indices ``i..j`` and re-based at ``t_i``."""
        x, a = self.level1[i:j + 1], self.level2[i:j + 1]
        dx = x - x[0]
        return RoughPathGrid(self.times[i:j + 1], dx, a - a[0] - x[0][None, :, None] * dx[:, None, :])

    def restrict(self, indices: Sequence[int]) -> "RoughPathGrid":
        """Sample the path on a sub-grid given by increasing indices starting at 0."""
        idx = np.asarray(indices, dtype=int)
        if idx[0] != 0:
            raise InvalidArgumentError("a sub-grid must contain the first time")
        return RoughPathGrid(self.times[idx], self.level1[idx], self.level2[idx])

    def to_signature_path(self) -> "SignaturePath":
        n = len(self)
        d = self.dim
        return SignaturePath(self.times, (self.level1, self.level2.reshape(n, d * d)))


@dataclass(frozen=True, eq=False)
class SignaturePath:
    """Depth-n group values on a grid; ``levels[k-1]`` has shape ``(N+1, d**k)``."""

    times: np.ndarray
    levels: tuple

    def __post_init__(self):
        times = _frozen(self.times)
        _check_times(times)
        levels = tuple(_frozen(lv) for lv in self.levels)
        if not levels:
            raise InvalidArgumentError("a signature path needs at least one level")
        d = levels[0].shape[1]
        for k, lv in enumerate(levels, start=1):
            if lv.shape != (times.size, d**k):
                raise InvalidArgumentError(f"level {k} has shape {lv.shape}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "levels", levels)

    @property
    def dim(self) -> int:
        return self.levels[0].shape[1]

    @property
    def depth(self) -> int:
        return len(self.levels)

    def __len__(self):
        return self.times.size

    def element(self, i: int) -> TruncatedTensor:
        return TruncatedTensor(self.dim, self.depth, tuple(lv[i] for lv in self.levels))

    @property
    def elements(self) -> list[TruncatedTensor]:
        return [self.element(i) for i in range(len(self))]

    def truncate(self, depth: int) -> "SignaturePath":
        return SignaturePath(self.times, self.levels[:depth])

    def to_rough_path(self) -> RoughPathGrid:
        if self.depth < 2:
            raise InvalidArgumentError("need depth >= 2 for a rough path")
        n, d = len(self), self.dim
        return RoughPathGrid(self.times, self.levels[0], self.levels[1].reshape(n, d, d))


def running_product(steps: Sequence[np.ndarray], start: Sequence[np.ndarray] | None = None) -> list[np.ndarray]:
    """Chen products ``start (x) E_0 (x) ... (x) E_{j-1}`` for all j.

    ``steps[k-1]`` holds level k of the step elements with shape
    ``(..., N, d**k)``; the result has the grid axis of length ``N+1``. Each
    level is a cumulative sum once lower levels are known, so no Python loop
    over the grid is needed.
    """
    n = len(steps)
    batch = steps[0].shape[:-2]
    out: list[np.ndarray] = []
    for k in range(1, n + 1):
        lead = np.zeros(batch + (1, steps[k - 1].shape[-1]))
        acc = steps[k - 1].copy()
        for m in range(1, k):
            acc += outer(out[k - m - 1][..., :-1, :], steps[m - 1])
        out.append(np.concatenate([lead, np.cumsum(acc, axis=-2)], axis=-2))
    if start is not None:
        start = [np.asarray(s, dtype=float) for s in start]
        shaped = [np.broadcast_to(s[..., None, :], o.shape) for s, o in zip(start, out)]
        out = mul_levels(shaped, out)
    return out


def total_product(steps: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Product of all steps along the grid axis (the last value of running_product)."""
    return [lv[..., -1, :] for lv in running_product(steps)]


def segment_signature(v, n: int) -> TruncatedTensor:
    """Tensor exponential of a linear segment with increment ``v``."""
    if n < 1:
        raise InvalidArgumentError("depth must be >= 1")
    v = np.asarray(v, dtype=float).reshape(-1)
    return TruncatedTensor(v.size, n, tuple(_segment_levels(v, n)))


def _segment_levels(v: np.ndarray, n: int) -> list[np.ndarray]:
    levels = [v]
    for k in range(2, n + 1):
        levels.append(outer(levels[-1], v) / k)
    return levels


def pl_signature(x: GridPath, n: int) -> SignaturePath:
    """Signature of the piecewise-linear interpolation of ``x`` at every grid time."""
    if len(x) < 2:
        raise InvalidArgumentError("need at least two grid points")
    if n < 1:
        raise InvalidArgumentError("depth must be >= 1")
    return SignaturePath(x.times, tuple(running_product(_segment_levels(x.increments(), n))))


def chen_increment(s: SignaturePath, i: int, j: int) -> TruncatedTensor:
    """``element_i^{-1} (x) element_j``."""
    n = len(s)
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidArgumentError(f"indices ({i}, {j}) outside 0..{n - 1}")
    if i > j:
        raise InvalidArgumentError("chen_increment needs i <= j")
    g = [lv[i] for lv in s.levels]
    h = [lv[j] for lv in s.levels]
    return TruncatedTensor(s.dim, s.depth, tuple(mul_levels(inv_levels(g), h)))


def depth2_log(dx1: np.ndarray, dx2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Logarithm of depth-2 elements ``(1, dx1, dx2)``; ``dx2`` has shape (..., d, d)."""
    return dx1, dx2 - 0.5 * dx1[..., :, None] * dx1[..., None, :]


def extend_steps(dx1: np.ndarray, dx2: np.ndarray, n: int) -> list[np.ndarray]:
    """Depth-n elements exp(log_2(step)), keeping higher log components at zero."""
    l1, l2 = depth2_log(dx1, dx2)
    d = dx1.shape[-1]
    flat2 = l2.reshape(l2.shape[:-2] + (d * d,))
    if n == 1:
        return [l1.copy()]
    return exp_levels(truncate_levels([l1, flat2], n, d))


def lyons_extend(gamma: RoughPathGrid, n: int) -> SignaturePath:
    """Extend a depth-2 grid rough path to depth ``n >= 3``.

    Each grid increment is mapped through its depth-2 logarithm and
    exponentiated at depth ``n``; the results are Chen-concatenated. Levels 1
    and 2 are reproduced exactly, including any symmetric drift part.
    """
    if n < 3:
        raise InvalidArgumentError("lyons_extend targets depth n >= 3")
    dx1, dx2 = gamma.increments()
    return SignaturePath(gamma.times, tuple(running_product(extend_steps(dx1, dx2, n))))
