"""Monte Carlo checks of the BDG-type norm equivalences (F(x) = x^q only)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError
from .lifts import TAG_NOISE, brownian_increments, cumulate, ito_levels
from .paths import GridPath, RoughPathGrid, lyons_extend
from .variation import p_variation


@dataclass
class MomentReport:
    """Moment estimates with standard errors for one martingale law."""

    q: float
    p: float
    n: int
    horizon: float
    paths: int
    pvar_moment: float
    pvar_se: float
    bracket_moment: float
    bracket_se: float
    terminal_moment: float
    terminal_se: float
    ratio: float
    ratio_se: float
    terminal_ratio: float
    terminal_ratio_se: float
    extra: dict = field(default_factory=dict)


def ratio_with_se(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """mean(a) / mean(b) and its delta-method standard error."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.size
    ma, mb = a.mean(), b.mean()
    r = ma / mb
    if n < 2:
        return float(r), float("inf")
    cov = np.cov(np.vstack([a, b]))
    var = (cov[0, 0] - 2 * r * cov[0, 1] + r * r * cov[1, 1]) / (mb * mb * n)
    return float(r), float(np.sqrt(max(var, 0.0)))


def _se(x):
    return float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else float("inf")


# generators return (times, paths) with paths of shape (count, N+1, d)

def brownian_generator(d: int = 1, steps: int = 256) -> Callable:
    def gen(horizon: float, seed: int, count: int):
        t = np.linspace(0.0, horizon, steps + 1)
        return t, cumulate(brownian_increments(t, d, seed, count, key=(TAG_NOISE, 7)))
    return gen


def scaled_generator(base: Callable, c: float) -> Callable:
    def gen(horizon: float, seed: int, count: int):
        t, z = base(horizon, seed, count)
        return t, c * z
    return gen


def phi_generator(phi: Callable, d: int = 1, steps: int = 256) -> Callable:
    """M = int phi(t) dB with a deterministic matrix function phi."""
    def gen(horizon: float, seed: int, count: int):
        t = np.linspace(0.0, horizon, steps + 1)
        db = brownian_increments(t, d, seed, count, key=(TAG_NOISE, 7))
        mats = np.array([np.atleast_2d(phi(s)) for s in t[:-1]])
        return t, cumulate(np.einsum("nij,rnj->rni", mats, db))
    return gen


def _pvar_norm(t, x1, x2, p, n):
    if n == 1:
        return p_variation(GridPath(t, x1), p)
    gamma = RoughPathGrid(t, x1, x2)
    if n == 2:
        return p_variation(gamma, p)
    return p_variation(lyons_extend(gamma, n), p)


def bdg_ratio_check(generator: Callable, p: float, q: float, n: int, paths: int,
                    horizon: float = 1.0, seed: int = 0, min_paths: int = 1000) -> MomentReport:
    """Estimate E||I_n(Z)||_{p-var}^q, E||<Z>||_inf^{q/2} and E|Z_T - Z_0|^q.

    ``ratio`` is the first over the second, ``terminal_ratio`` the third over
    the second; both carry delta-method standard errors.
    """
    if not p > 2:
        raise InvalidArgumentError("p must exceed 2")
    if not 0 < q <= 4:
        raise InvalidArgumentError("q must lie in (0, 4]")
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if paths < min_paths:
        raise InvalidArgumentError(f"need at least {min_paths} paths, got {paths}")
    t, z = generator(horizon, seed, paths)
    x1, x2 = ito_levels(z)
    dz = np.diff(z, axis=1)
    qv = np.cumsum(dz[:, :, :, None] * dz[:, :, None, :], axis=1)
    bracket_sup = np.max(np.sqrt(np.sum(qv**2, axis=(2, 3))), axis=1)
    norms = np.array([_pvar_norm(t, x1[r], x2[r], p, n) for r in range(paths)])
    a = norms**q
    b = bracket_sup ** (q / 2)
    c = np.sqrt(np.sum((z[:, -1] - z[:, 0]) ** 2, axis=1)) ** q
    r, r_se = ratio_with_se(a, b)
    rt, rt_se = ratio_with_se(c, b)
    return MomentReport(q, p, n, horizon, paths, float(a.mean()), _se(a), float(b.mean()), _se(b),
                        float(c.mean()), _se(c), r, r_se, rt, rt_se)


def horizon_study(generator: Callable, p: float, q: float, n: int, paths: int,
                  horizons=(0.5, 1.0, 2.0), seed: int = 0) -> tuple[list[MomentReport], float]:
    """Reports per horizon and the max/min spread of the p-variation ratio."""
    reports = [bdg_ratio_check(generator, p, q, n, paths, h, seed + i) for i, h in enumerate(horizons)]
    ratios = [rep.ratio for rep in reports]
    return reports, float(max(ratios) / min(ratios))
