"""p-variation and the d_p distance of grid-sampled paths.

Suprema are taken over sub-partitions of the sampling grid only, which is a
lower bound for the continuous-time supremum. The O(N^2) dynamic programme
runs in a compiled kernel when ``roughito._variation_core`` was built, and in
numpy otherwise; set ``ROUGHITO_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _variation_py
from .errors import InvalidArgumentError
from .paths import GridPath, RoughPathGrid, SignaturePath
from .tensor import homogeneous_norm_levels, inv_levels, mul_levels


def _select_backend():
    if os.environ.get("ROUGHITO_PURE_PYTHON"):
        return _variation_py, "python"
    try:
        from . import _variation_core
    except ImportError:
        return _variation_py, "python"
    return _variation_core, "cython"


_kernel, BACKEND = _select_backend()


def use_backend(name: str):
    """Switch backend at runtime ("cython" or "python"); used by the benchmark."""
    global _kernel, BACKEND
    if name == "python":
        _kernel, BACKEND = _variation_py, "python"
    elif name == "cython":
        from . import _variation_core
        _kernel, BACKEND = _variation_core, "cython"
    else:
        raise InvalidArgumentError(f"unknown backend {name!r}")


def _check_p(p):
    if not (p >= 1):
        raise InvalidArgumentError(f"p must be >= 1, got {p}")


def _sup_sum_generic(levels, power):
    # depth > 2: increments need the full group product, done in numpy
    n = levels[0].shape[0]
    best = np.zeros(n)
    for j in range(1, n):
        inc = mul_levels(inv_levels([lv[:j] for lv in levels]),
                         [np.broadcast_to(lv[j], lv[:j].shape) for lv in levels])
        best[j] = np.max(best[:j] + homogeneous_norm_levels(inc) ** power)
    return float(best[-1])


def _as_depth2(path):
    if isinstance(path, RoughPathGrid):
        n, d = len(path), path.dim
        return path.level1, path.level2.reshape(n, d * d)
    return path.levels[0], path.levels[1]


def p_variation(path, p: float, level: int | None = None) -> float:
    """Grid p-variation of a GridPath, RoughPathGrid or SignaturePath.

    For group-valued paths the increment size is the homogeneous norm; with
    ``level`` set, only the Frobenius norm of that level is used.
    """
    _check_p(p)
    if p == np.inf:
        return infinity_variation(path, level)
    if len(path) < 2:
        return 0.0
    if isinstance(path, GridPath):
        total = _kernel.sup_sum_vector(path.values, p)
    elif isinstance(path, SignaturePath) and path.depth == 1:
        total = _kernel.sup_sum_vector(path.levels[0], p)
    elif isinstance(path, RoughPathGrid) or path.depth == 2 or level in (1, 2):
        if level is None:
            mode = 0
        elif level in (1, 2):
            mode = level
        else:
            raise InvalidArgumentError(f"level must be 1 or 2, got {level}")
        x1, x2 = _as_depth2(path)
        if mode == 1:
            total = _kernel.sup_sum_vector(x1, p)
        else:
            total = _kernel.sup_sum_depth2(x1, x2, p, mode)
    else:
        if level is not None:
            raise InvalidArgumentError("level selection is limited to levels 1 and 2")
        total = _sup_sum_generic(path.levels, p)
    return float(total ** (1.0 / p))


def infinity_variation(path, level: int | None = None) -> float:
    """sup over grid pairs s <= t of the increment size."""
    if isinstance(path, GridPath):
        x = path.values
        return float(max(np.max(np.sqrt(np.sum((x[j] - x[:j + 1]) ** 2, axis=1))) for j in range(len(x))))
    if isinstance(path, RoughPathGrid):
        path = path.to_signature_path()
    levels = path.levels
    top = 0.0
    for j in range(len(path)):
        inc = mul_levels(inv_levels([lv[:j + 1] for lv in levels]),
                         [np.broadcast_to(lv[j], lv[:j + 1].shape) for lv in levels])
        if level is None:
            size = homogeneous_norm_levels(inc)
        else:
            size = np.sqrt(np.sum(inc[level - 1] ** 2, axis=-1))
        top = max(top, float(np.max(size)))
    return top


def dp_distance(gamma: RoughPathGrid, other: RoughPathGrid, p: float) -> float:
    """max over k = 1, 2 of (sup_D sum |pi_k increment difference|^(p/k))^(1/p)."""
    _check_p(p)
    if len(gamma) != len(other) or not np.array_equal(gamma.times, other.times):
        raise InvalidArgumentError("d_p needs rough paths on the same time grid")
    if gamma.dim != other.dim:
        raise InvalidArgumentError("d_p needs rough paths of the same dimension")
    if len(gamma) < 2:
        return 0.0
    n, d = len(gamma), gamma.dim
    s1 = _kernel.sup_sum_vector(gamma.level1 - other.level1, p)
    s2 = _kernel.sup_sum_level2_diff(gamma.level1, gamma.level2.reshape(n, d * d),
                                     other.level1, other.level2.reshape(n, d * d), p / 2.0)
    return float(max(s1, s2) ** (1.0 / p))
