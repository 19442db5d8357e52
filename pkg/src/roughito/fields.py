"""Vector fields f: R^e -> L(R^d, R^e) and the built-in registry.

Evaluators are vectorised over leading axes:

* ``f(y)``   maps (..., e) to (..., e, d)
* ``df(y)``  maps (..., e) to (..., e, d, e), last axis = direction of
  differentiation
* ``d2f(y)`` maps (..., e) to (..., e, d, e, e)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidArgumentError, UnsupportedFieldError

FD_RTOL = 1e-5


@dataclass(frozen=True, eq=False)
class VectorField:
    d: int
    e: int
    f: Callable
    df: Optional[Callable] = None
    d2f: Optional[Callable] = None
    lip_beta: float = np.inf
    lip_norm: float = np.inf
    name: str = "custom"
    meta: dict = field(default_factory=dict)
    validate: bool = False

    def __post_init__(self):
        if self.d < 1 or self.e < 1:
            raise InvalidArgumentError("field dimensions must be >= 1")
        probe = np.zeros(self.e)
        out = np.asarray(self.f(probe))
        if out.shape != (self.e, self.d):
            raise InvalidArgumentError(f"f must return shape {(self.e, self.d)}, got {out.shape}")
        if self.validate:
            check_derivatives(self)

    def require_df(self):
        if self.df is None:
            raise UnsupportedFieldError(f"field {self.name!r} has no first derivative")
        return self.df

    def require_d2f(self):
        if self.d2f is None:
            raise UnsupportedFieldError(f"field {self.name!r} has no second derivative")
        return self.d2f


def _fd(fun, y, h):
    # central differences; returns (..., e) + out_shape along a new last axis
    cols = []
    for k in range(y.shape[-1]):
        step = np.zeros_like(y)
        step[..., k] = h
        cols.append((np.asarray(fun(y + step)) - np.asarray(fun(y - step))) / (2 * h))
    return np.stack(cols, axis=-1)


def check_derivatives(vf: VectorField, probes: int = 8, seed: int = 12345, scale: float = 1.0):
    """Compare df (and d2f when present) with central differences at random points."""
    rng = np.random.default_rng(seed)
    for y in rng.normal(scale=scale, size=(probes, vf.e)):
        for fun, der, label in ((vf.f, vf.df, "df"), (vf.df, vf.d2f, "d2f")):
            if der is None or fun is None:
                continue
            approx = _fd(fun, y, 1e-6)
            exact = np.asarray(der(y))
            err = np.max(np.abs(approx - exact))
            ref = max(1.0, float(np.max(np.abs(exact))))
            if not np.isfinite(err) or err > FD_RTOL * ref:
                raise InvalidArgumentError(
                    f"{label} of field {vf.name!r} disagrees with finite differences (err {err:.2e})")
    return True


# ---------------------------------------------------------------- built-ins

def linear_field(mats, name: str = "linear") -> VectorField:
    """f(y)^{a i} = (A_i y)_a for a stack of e x e matrices A_i, i < d."""
    a = np.asarray(mats, dtype=float)
    if a.ndim == 2:
        a = a[None]
    d, e = a.shape[0], a.shape[1]
    # f[a, i] = sum_b A[i, a, b] y_b
    lin = np.transpose(a, (1, 0, 2)).copy()  # (e, d, e)

    def f(y):
        return np.einsum("aib,...b->...ai", lin, y)

    def df(y):
        y = np.asarray(y)
        return np.broadcast_to(lin, y.shape[:-1] + lin.shape)

    def d2f(y):
        y = np.asarray(y)
        return np.zeros(y.shape[:-1] + (e, d, e, e))

    norm = float(np.max(np.abs(a))) if a.size else 0.0
    return VectorField(d, e, f, df, d2f, lip_beta=np.inf, lip_norm=np.inf, name=name,
                       meta={"matrices": a.tolist(), "unbounded": True, "lipschitz": norm})


def scalar_linear(a: float = 1.0, name: str = "linear1d") -> VectorField:
    """d = e = 1, f(y) = a y."""
    vf = linear_field([[[float(a)]]], name=name)
    return VectorField(1, 1, vf.f, vf.df, vf.d2f, vf.lip_beta, vf.lip_norm, name,
                       {"a": float(a), "scalar_linear": True})


def constant_field(c) -> VectorField:
    c = np.atleast_2d(np.asarray(c, dtype=float))
    e, d = c.shape

    def f(y):
        y = np.asarray(y)
        return np.broadcast_to(c, y.shape[:-1] + (e, d)).copy()

    def df(y):
        y = np.asarray(y)
        return np.zeros(y.shape[:-1] + (e, d, e))

    def d2f(y):
        y = np.asarray(y)
        return np.zeros(y.shape[:-1] + (e, d, e, e))

    return VectorField(d, e, f, df, d2f, lip_beta=np.inf, lip_norm=float(np.max(np.abs(c), initial=0.0)),
                       name="constant", meta={"c": c.tolist()})


def trig_field(d: int = 1, e: int = 1, scale: float = 1.0) -> VectorField:
    """Bounded smooth field f^{a i}(y) = scale * sin(u_{a i}).

    u_{a i} = y_a + c y_{(a+1) mod e} + i with c = 1/2 when e > 1, so the
    components are coupled in higher dimension. For d = e = 1 it is sin(y).
    """
    c = 0.5 if e > 1 else 0.0
    v = np.zeros((e, e))
    for a in range(e):
        v[a, a] += 1.0
        v[a, (a + 1) % e] += c
    shift = np.arange(d, dtype=float)[None, :]

    def u(y):
        y = np.asarray(y, dtype=float)
        return (y @ v.T)[..., :, None] + shift

    def f(y):
        return scale * np.sin(u(y))

    def df(y):
        return scale * np.cos(u(y))[..., None] * v[:, None, :]

    def d2f(y):
        return -scale * np.sin(u(y))[..., None, None] * (v[:, :, None] * v[:, None, :])[:, None, :, :]

    return VectorField(d, e, f, df, d2f, lip_beta=np.inf, lip_norm=scale * (1 + c) ** 2,
                       name="trig", meta={"scale": scale})


def polyclip_field(d: int = 1, e: int = 1, radius: float = 3.0) -> VectorField:
    """Quadratic polynomial of a smoothly clipped state s = R tanh(y / R).

    f^{a i}(y) = (1 + i/10)(1 + s_a/2 + s_a^2/4); bounded with bounded
    derivatives of every order.
    """
    r = float(radius)
    w = 1.0 + 0.1 * np.arange(d, dtype=float)

    def parts(y):
        y = np.asarray(y, dtype=float)
        s = r * np.tanh(y / r)
        s1 = 1.0 - (s / r) ** 2
        s2 = -2.0 * s * s1 / r**2
        p = 1.0 + 0.5 * s + 0.25 * s * s
        p1 = 0.5 + 0.5 * s
        return s, s1, s2, p, p1

    eye = np.eye(e)

    def f(y):
        _, _, _, p, _ = parts(y)
        return p[..., :, None] * w

    def df(y):
        _, s1, _, _, p1 = parts(y)
        g = p1 * s1  # d/dy_a of p(s_a)
        return (g[..., :, None] * w)[..., None] * eye[:, None, :]

    def d2f(y):
        _, s1, s2, _, p1 = parts(y)
        h = 0.5 * s1 * s1 + p1 * s2
        diag = eye[:, :, None] * eye[:, None, :]  # (a, k, l)
        return (h[..., :, None] * w)[..., None, None] * diag[:, None, :, :]

    return VectorField(d, e, f, df, d2f, lip_beta=np.inf, lip_norm=float(np.max(w)) * (1 + r / 2 + r * r / 4),
                       name="polyclip", meta={"radius": r})


REGISTRY = {
    "linear": lambda d=1, e=1, a=1.0: scalar_linear(a, "linear") if d == e == 1 else linear_field(
        [a * np.eye(e)] * d, "linear"),
    "linear1d": lambda d=1, e=1, a=1.0: scalar_linear(a, "linear1d"),
    "gbm": lambda d=1, e=1, a=1.0: scalar_linear(a, "gbm"),
    "constant": lambda d=1, e=1, a=1.0: constant_field(a * np.ones((e, d))),
    "trig": lambda d=1, e=1, a=1.0: trig_field(d, e, a),
    "polyclip": lambda d=1, e=1, a=3.0: polyclip_field(d, e, a),
}


def get_field(key: str, d: int = 1, e: int = 1, **params) -> VectorField:
    try:
        make = REGISTRY[key]
    except KeyError:
        raise InvalidArgumentError(f"unknown field {key!r}; choose from {sorted(REGISTRY)}") from None
    return make(d=d, e=e, **params)
