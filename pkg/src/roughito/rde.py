"""Rough differential equations driven by depth-2 grid rough paths.

The step map is the increment Euler scheme with a level-2 correction,

    y_{k+1} = y_k + f(y_k) pi_1(inc_k) + (Dff)(y_k) pi_2(inc_k),

on the driver's own grid. ``pi_2`` carries both the area and the symmetric
drift of the increment, so an Ito-lifted driver yields the Ito solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergedError, InvalidArgumentError
from .fields import VectorField
from .paths import GridPath, RoughPathGrid, SignaturePath, extend_steps, running_product
from .tensor import TruncatedTensor, mul_levels, truncate_levels

BLOWUP = 1e8
MODES = ("euler", "ode-approx")


def dff(vf: VectorField, y) -> np.ndarray:
    """(Dff)(y) as an array (..., e, d, d).

    Entry ``[a, j, i]`` is ``sum_k d_k f^{a i}(y) f^{k j}(y)``; contracting it
    with ``A[j, i]`` gives the second-order term, the first tensor slot being
    the earlier increment.
    """
    df = vf.require_df()
    y = np.asarray(y, dtype=float)
    return np.einsum("...aik,...kj->...aji", df(y), vf.f(y))


def _check_state(y, t):
    if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > BLOWUP:
        raise DivergedError(f"solution left the bounded region at t={t:.6g}", time=float(t))


def _rhs(vf, y, dx, area):
    return np.einsum("...ai,...i->...a", vf.f(y), dx) + np.einsum("...aji,...ji->...a", dff(vf, y), area)


def euler_path(vf: VectorField, y0, dx: np.ndarray, da: np.ndarray, times=None, mode: str = "euler") -> np.ndarray:
    """Run the step map over increments dx (..., N, d), da (..., N, d, d).

    Leading axes are replicas; returns states (..., N+1, e).
    """
    if mode not in MODES:
        raise InvalidArgumentError(f"mode must be one of {MODES}")
    y = np.array(np.broadcast_to(y0, dx.shape[:-2] + (vf.e,)), dtype=float)
    n = dx.shape[-2]
    out = np.empty(dx.shape[:-2] + (n + 1, vf.e))
    out[..., 0, :] = y
    if times is None:
        times = np.arange(n + 1, dtype=float)
    for k in range(n):
        x, a = dx[..., k, :], da[..., k, :, :]
        if mode == "euler":
            y = y + _rhs(vf, y, x, a)
        else:
            # chord ODE dy/ds = f(y) dx + Dff(y)(A - dx(x)dx/2) on s in [0, 1], RK4
            corr = a - 0.5 * x[..., :, None] * x[..., None, :]
            k1 = _rhs(vf, y, x, corr)
            k2 = _rhs(vf, y + 0.5 * k1, x, corr)
            k3 = _rhs(vf, y + 0.5 * k2, x, corr)
            k4 = _rhs(vf, y + k3, x, corr)
            y = y + (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        _check_state(y, times[k + 1])
        out[..., k + 1, :] = y
    return out


def solution_steps(vf: VectorField, ys: np.ndarray, dx: np.ndarray, da: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Depth-2 step increments of the solution: polygon part plus transported drift."""
    dy = np.diff(ys, axis=-2)
    drift = 0.5 * (da + np.swapaxes(da, -1, -2)) - 0.5 * dx[..., :, None] * dx[..., None, :]
    fy = vf.f(ys[..., :-1, :])
    l2 = 0.5 * dy[..., :, None] * dy[..., None, :] + np.einsum("...ai,...ij,...bj->...ab", fy, drift, fy)
    return dy, l2


def enhancement_levels(vf, ys, dx, da, n: int) -> list[np.ndarray]:
    """Running group path of the solution at depth n (starting at identity)."""
    dy, l2 = solution_steps(vf, ys, dx, da)
    if n == 1:
        return running_product([dy])
    if n == 2:
        e = dy.shape[-1]
        return running_product([dy, l2.reshape(l2.shape[:-2] + (e * e,))])
    return running_product(extend_steps(dy, l2, n))


def increment_levels(vf, ys, dx, da, n: int) -> list[np.ndarray]:
    """Group increment of the solution over the whole step range (no grid axis)."""
    return [lv[..., -1, :] for lv in enhancement_levels(vf, ys, dx, da, n)]


def _as_xi(xi, e: int, depth: int | None) -> TruncatedTensor:
    if isinstance(xi, TruncatedTensor):
        if xi.dim != e:
            raise InvalidArgumentError(f"initial value lives in R^{xi.dim}, field needs R^{e}")
        if depth is not None and depth != xi.depth:
            return TruncatedTensor(e, depth, tuple(truncate_levels(list(xi.levels), depth, e)))
        return xi
    v = np.asarray(xi, dtype=float).reshape(-1)
    if v.size != e:
        raise InvalidArgumentError(f"initial point must lie in R^{e}")
    depth = depth or 1
    return TruncatedTensor(e, depth, tuple(truncate_levels([v], depth, e)))


class RdeSolution:
    """First level on the driver grid plus the lazily built depth-n group path."""

    def __init__(self, first_level: GridPath, driver: RoughPathGrid, vf: VectorField, xi: TruncatedTensor):
        self.first_level = first_level
        self.driver = driver
        self.vf = vf
        self.xi = xi
        self._group = None

    @property
    def depth(self) -> int:
        return self.xi.depth

    @property
    def group(self) -> SignaturePath:
        if self._group is None:
            self._group = enhance_solution(self.first_level, self.driver, self.vf, self.xi, self.depth)
        return self._group

    @property
    def terminal(self) -> np.ndarray:
        return self.first_level.values[-1]


def rde_solve(gamma: RoughPathGrid, vf: VectorField, xi, depth: int | None = None,
              mode: str = "euler") -> RdeSolution:
    """Solve dY = f(pi_1 Y) d gamma with Y_0 = xi on gamma's grid."""
    if vf.d != gamma.dim:
        raise InvalidArgumentError(f"field expects a {vf.d}-dim driver, got {gamma.dim}")
    xi = _as_xi(xi, vf.e, depth)
    dx, da = gamma.increments()
    ys = euler_path(vf, xi.levels[0], dx, da, gamma.times, mode)
    return RdeSolution(GridPath(gamma.times, ys), gamma, vf, xi)


def enhance_solution(first_level: GridPath, gamma: RoughPathGrid, vf: VectorField, xi, n: int) -> SignaturePath:
    """xi (x) (depth-n enhancement of the solved first level)."""
    if len(first_level) != len(gamma) or not np.array_equal(first_level.times, gamma.times):
        raise InvalidArgumentError("solution and driver must share a grid")
    xi = _as_xi(xi, vf.e, n)
    dx, da = gamma.increments()
    levels = enhancement_levels(vf, first_level.values, dx, da, n)
    start = [np.broadcast_to(lv, (len(gamma), lv.size)) for lv in xi.levels]
    return SignaturePath(gamma.times, tuple(mul_levels(start, levels)))


def sde_euler_maruyama(z: GridPath, vf: VectorField, y0) -> GridPath:
    """y_{k+1} = y_k + f(y_k)(Z_{t_{k+1}} - Z_{t_k})."""
    if vf.d != z.dim:
        raise InvalidArgumentError(f"field expects a {vf.d}-dim driver, got {z.dim}")
    dz = z.increments()
    ys = euler_path(vf, np.asarray(y0, dtype=float), dz, np.zeros(dz.shape + (z.dim,)), z.times)
    return GridPath(z.times, ys)


@dataclass(frozen=True, eq=False)
class OneForm:
    """g: R^d -> L(R^d, R^e) with derivative ``dg`` (..., e, d, d), last axis = direction."""

    d: int
    e: int
    g: object
    dg: object = None
    name: str = "one-form"


def _extended_field(form) -> VectorField:
    d, e = form.d, form.e
    eye = np.eye(d)

    def f(y):
        y = np.asarray(y, dtype=float)
        x = y[..., :d]
        top = np.broadcast_to(eye, x.shape[:-1] + (d, d))
        return np.concatenate([top, np.asarray(form.g(x))], axis=-2)

    def df(y):
        y = np.asarray(y, dtype=float)
        x = y[..., :d]
        out = np.zeros(x.shape[:-1] + (d + e, d, d + e))
        if form.dg is None:
            raise InvalidArgumentError("one-form needs its derivative")
        out[..., d:, :, :d] = form.dg(x)
        return out

    return VectorField(d, d + e, f, df, name=f"extended-{getattr(form, 'name', 'form')}")


def rough_integral_one_form(form, gamma: RoughPathGrid, origin=None) -> RoughPathGrid:
    """Rough integral of a one-form along gamma, projected to T^(2)(R^e).

    ``form`` is a OneForm or a VectorField with d == e (its ``f``/``df`` are
    read as g/Dg).
    ``origin`` is the base point x_0 the driver's first level is added to.
    """
    if isinstance(form, VectorField):
        if form.d != form.e:
            raise InvalidArgumentError("a vector field used as a one-form needs d == e; wrap g in OneForm")
        form = OneForm(form.d, form.e, form.f, form.df, form.name)
    if form.d != gamma.dim:
        raise InvalidArgumentError("one-form and driver dimensions differ")
    d, e = form.d, form.e
    x0 = np.zeros(d) if origin is None else np.asarray(origin, dtype=float).reshape(d)
    ext = _extended_field(form)
    dx, da = gamma.increments()
    ys = euler_path(ext, np.concatenate([x0, np.zeros(e)]), dx, da, gamma.times)
    # enhancement of the extended solution, projected onto the e-block
    dy, l2 = solution_steps(ext, ys, dx, da)
    dz, l2z = dy[:, d:], l2[:, d:, d:]
    lv = running_product([dz, l2z.reshape(-1, e * e)])
    return RoughPathGrid(gamma.times, lv[0], lv[1].reshape(-1, e, e))
