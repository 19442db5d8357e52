"""Recover the Ito solution by concatenating discounted Stratonovich solutions.

On each partition interval [t_j, t_{j+1}] the state is advanced by

    y_{t_{j+1}} = y_{t_j} (x) y1 (x) E(y2)^{-1} (x) y1

where y1 is the group increment of the solution driven by gamma and y2 the
one driven by the perturbed path gamma + S_2(M), both started at the current
state. E(y2) is a Monte Carlo mean over noise replicas, or an analytic
expectation for scalar linear fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import comb, factorial

import numpy as np

from .errors import DivergedError, InvalidArgumentError
from .fields import VectorField
from .lifts import (
    TAG_NOISE,
    BracketGrid,
    NoiseSpec,
    brownian_increments,
    dyadic_partition,
    noise_bracket,
    partition_indices,
    perturbed_increments,
    phi_on_grid,
    shift_level2,
)
from .paths import RoughPathGrid
from .rde import _as_xi, euler_path, increment_levels, rde_solve
from .rng import mean_and_se
from .tensor import TruncatedTensor, inv_levels, mul_levels

EXPECTATION_MODES = ("monte-carlo", "closed-form-linear")
COUPLINGS = ("per-interval", "shared-path")
SHARED_KEY = 2**31 - 1


@dataclass(frozen=True, eq=False)
class SchemeConfig:
    """Partition (grid indices into the driver grid), replica count, depth and noise.

    ``coupling`` selects how replica noise is drawn: ``per-interval`` uses a
    fresh substream per interval; ``shared-path`` restricts one fine-grid
    Brownian path per replica to each interval (increments on disjoint
    intervals are still independent, and runs on different partitions share
    common random numbers).
    """

    partition: np.ndarray
    mc_samples: int
    depth: int
    noise: NoiseSpec
    expectation_mode: str = "monte-carlo"
    mc_floor: int = 100
    coupling: str = "per-interval"

    def __post_init__(self):
        if self.expectation_mode not in EXPECTATION_MODES:
            raise InvalidArgumentError(f"expectation_mode must be one of {EXPECTATION_MODES}")
        if self.coupling not in COUPLINGS:
            raise InvalidArgumentError(f"coupling must be one of {COUPLINGS}")
        if self.depth < 1:
            raise InvalidArgumentError("depth must be >= 1")
        if self.mc_samples < 1:
            raise InvalidArgumentError("mc_samples must be >= 1")
        if self.expectation_mode == "monte-carlo" and self.mc_samples < self.mc_floor:
            raise InvalidArgumentError(
                f"monte-carlo mode needs at least {self.mc_floor} replicas, got {self.mc_samples}")

    @property
    def seed(self) -> int:
        return self.noise.seed


@dataclass(frozen=True, eq=False)
class SchemeOutput:
    """Values of y^{n,D} at the partition times and per-interval MC standard errors."""

    times: np.ndarray
    levels: list
    se: list = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def element(self, j: int) -> TruncatedTensor:
        return TruncatedTensor.from_levels([lv[j] for lv in self.levels])

    def value(self, t: float) -> TruncatedTensor:
        """Piecewise constant: the value at t_{j+1} holds on (t_j, t_{j+1}]."""
        j = int(np.searchsorted(self.times, t, side="left"))
        if t < self.times[0] or j >= self.times.size:
            raise InvalidArgumentError(f"t={t} outside the partition range")
        return self.element(j)

    @property
    def max_se(self) -> float:
        vals = [float(np.max(s)) for row in self.se for s in row]
        return max(vals) if vals else 0.0


def ito_rough_driver(gamma: RoughPathGrid, bracket_m: BracketGrid) -> RoughPathGrid:
    """gamma with level 2 shifted by -<M>/2."""
    return shift_level2(gamma, bracket_m, -1)


def _noise_increments(cfg: SchemeConfig, times, j, a, b, cache):
    d = cfg.noise.dim
    phi = phi_on_grid(cfg.noise, times)
    if cfg.coupling == "shared-path":
        if "db" not in cache:
            cache["db"] = brownian_increments(times, d, cfg.seed, cfg.mc_samples, key=(TAG_NOISE, SHARED_KEY))
        db = cache["db"][:, a:b]
    else:
        db = brownian_increments(times[a:b + 1], d, cfg.seed, cfg.mc_samples, key=(TAG_NOISE, j))
    return np.einsum("nij,rnj->rni", phi[a:b], db)


def strat_increment_pair(j: int, state: TruncatedTensor, gamma: RoughPathGrid, vf: VectorField,
                         dm: np.ndarray, a: int, b: int) -> tuple[list, list]:
    """Group increments (y1, y2) over grid indices a..b started at ``state``.

    ``dm`` holds noise increments of shape (R, b - a, d); y2 keeps the replica
    axis. Solver blow-up is re-raised with the interval index attached.
    """
    dx, da = gamma.increments()
    dx, da = dx[a:b], da[a:b]
    n = state.depth
    y0 = state.levels[0]
    try:
        ys1 = euler_path(vf, y0, dx, da, gamma.times[a:b + 1])
        inc1 = increment_levels(vf, ys1, dx, da, n)
        l1, l2 = perturbed_increments(dx, da, dm)
        ys2 = euler_path(vf, y0, l1, l2, gamma.times[a:b + 1])
        inc2 = increment_levels(vf, ys2, l1, l2, n)
    except DivergedError as exc:
        raise DivergedError(f"interval {j}: {exc}", time=exc.time, interval=j) from None
    return inc1, inc2


def expected_increment_inverse(j: int, samples: list) -> tuple[list, list]:
    """Inverse of the per-level replica mean (level 0 of the mean is exactly 1).

    Returns (inverse levels, standard errors of the mean).
    """
    means, ses = [], []
    for lv in samples:
        lv = np.asarray(lv, dtype=float)
        if not np.all(np.isfinite(lv)):
            raise DivergedError(f"interval {j}: non-finite replica", interval=j)
        m, s = mean_and_se(lv, axis=0)
        means.append(m)
        ses.append(s)
    return inv_levels(means), ses


def _linear_closed_form(vf: VectorField, gamma: RoughPathGrid, cfg: SchemeConfig):
    if not (vf.d == vf.e == 1 and vf.meta.get("scalar_linear")):
        raise InvalidArgumentError("closed-form-linear mode needs a scalar linear field")
    dx, da = gamma.increments()
    if np.max(np.abs(da[:, 0, 0] - 0.5 * dx[:, 0] ** 2), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(da))):
        raise InvalidArgumentError("closed-form-linear mode needs a geometric driver")
    return float(vf.meta["a"])


def _closed_form_pair(coef: float, z: float, x_inc: float, var: float, n: int):
    c = np.exp(coef * x_inc)
    d1 = z * (c - 1.0)
    inc1 = [np.array([d1**k / factorial(k)]) for k in range(1, n + 1)]
    mean2 = []
    for k in range(1, n + 1):
        mom = sum(comb(k, i) * (-1.0) ** (k - i) * c**i * np.exp(0.5 * i * i * coef * coef * var)
                  for i in range(k + 1))
        mean2.append(np.array([z**k * mom / factorial(k)]))
    return inc1, mean2


def concat_discounted(gamma: RoughPathGrid, vf: VectorField, xi, cfg: SchemeConfig) -> SchemeOutput:
    if vf.d != gamma.dim:
        raise InvalidArgumentError("field and driver dimensions differ")
    if cfg.noise.dim != gamma.dim:
        raise InvalidArgumentError("noise and driver dimensions differ")
    idx = partition_indices(gamma.times, cfg.partition)
    state = _as_xi(xi, vf.e, cfg.depth)
    values = [[lv.copy()] for lv in state.levels]
    ses = []
    cache: dict = {}
    closed = cfg.expectation_mode == "closed-form-linear"
    if closed:
        coef = _linear_closed_form(vf, gamma, cfg)
        qm = noise_bracket(cfg.noise).values[:, 0, 0]
    for j, (a, b) in enumerate(zip(idx[:-1], idx[1:])):
        if closed:
            z = float(state.levels[0][0])
            x_inc = float(gamma.level1[b, 0] - gamma.level1[a, 0])
            inc1, mean2 = _closed_form_pair(coef, z, x_inc, float(qm[b] - qm[a]), cfg.depth)
            inv2, se = inv_levels(mean2), [np.zeros(1) for _ in mean2]
        else:
            dm = _noise_increments(cfg, gamma.times, j, a, b, cache)
            inc1, inc2 = strat_increment_pair(j, state, gamma, vf, dm, a, b)
            inv2, se = expected_increment_inverse(j, inc2)
        new = mul_levels(mul_levels(mul_levels(list(state.levels), inc1), inv2), inc1)
        if not all(np.all(np.isfinite(lv)) for lv in new):
            raise DivergedError(f"interval {j}: non-finite state", time=float(gamma.times[b]), interval=j)
        state = TruncatedTensor(state.dim, state.depth, tuple(new))
        for k, lv in enumerate(state.levels):
            values[k].append(lv.copy())
        ses.append(se)
    return SchemeOutput(gamma.times[idx], [np.array(v) for v in values], ses)


def reference_solution(gamma: RoughPathGrid, vf: VectorField, xi, cfg: SchemeConfig):
    """Fine-grid solution driven by gamma with level 2 shifted by -<M>/2."""
    driver = ito_rough_driver(gamma, noise_bracket(cfg.noise))
    return rde_solve(driver, vf, xi, depth=cfg.depth)


def scheme_error(out: SchemeOutput, ref_levels: list, idx: np.ndarray) -> tuple[float, list]:
    """max over levels of the sup over partition points of |pi_k(y) - pi_k(Y)|."""
    per_level = [float(np.max(np.abs(lv - ref[idx]))) for lv, ref in zip(out.levels, ref_levels)]
    return max(per_level), per_level


def convergence_study(gamma: RoughPathGrid, vf: VectorField, xi, cfg: SchemeConfig,
                      ms=range(3, 9), reference=None) -> list[dict]:
    """Scheme error against the fine-grid reference for dyadic partitions D_m.

    ``cfg.partition`` is ignored; each row uses D_m. ``reference`` may be a
    precomputed RdeSolution on gamma's grid.
    """
    n_steps = len(gamma) - 1
    if reference is None:
        reference = reference_solution(gamma, vf, xi, cfg)
    ref_levels = list(reference.group.levels)
    rows = []
    for m in ms:
        idx = dyadic_partition(n_steps, m)
        out = concat_discounted(gamma, vf, xi, replace(cfg, partition=idx))
        err, per_level = scheme_error(out, ref_levels, idx)
        rows.append({
            "m": int(m),
            "intervals": int(idx.size - 1),
            "mesh": float(np.max(np.diff(gamma.times[idx]))),
            "error": err,
            "level_errors": per_level,
            "max_se": out.max_se,
            "final": [lv[-1].copy() for lv in out.levels],
        })
    return rows
