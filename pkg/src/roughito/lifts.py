"""Brownian sampling, martingales M = int phi dB, Ito/Stratonovich lifts,
brackets and the perturbed rough path gamma + S_2(M).

The public functions take and return path objects. The ``*_levels`` helpers
work on raw arrays with leading replica axes and are what the Monte Carlo
code uses.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .errors import InvalidArgumentError
from .paths import GridPath, RoughPathGrid, pl_signature
from .rng import normal_replicas

# stream tags so unrelated draws never share a substream
TAG_BROWNIAN = 1
TAG_NOISE = 2


@dataclass(frozen=True, eq=False)
class BracketGrid:
    """Symmetric d x d matrices <Z>_{t_i} on a grid, starting at 0."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        if v.ndim != 3 or v.shape[1] != v.shape[2] or v.shape[0] != t.size:
            raise InvalidArgumentError("bracket values must have shape (N+1, d, d)")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("bracket values must be finite")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.times.size

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    @classmethod
    def zero(cls, times, d: int) -> "BracketGrid":
        times = np.asarray(times, dtype=float)
        return cls(times, np.zeros((times.size, d, d)))


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """phi as a GridPath in R^{d*d} (row-major matrices), a seed and a replica count."""

    phi: GridPath
    seed: int = 0
    paths: int = 1

    def __post_init__(self):
        k = self.phi.dim
        d = int(round(np.sqrt(k)))
        if d * d != k:
            raise InvalidArgumentError("phi must hold d*d entries per time")
        if self.paths < 1:
            raise InvalidArgumentError("paths must be >= 1")
        phi = self.phi.values.reshape(-1, d, d)
        dt = np.diff(self.phi.times)
        if not np.isfinite(np.sum(np.sum(phi[:-1] ** 2, axis=(1, 2)) * dt)):
            raise InvalidArgumentError("phi must be square integrable")

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.phi.dim)))

    @property
    def times(self) -> np.ndarray:
        return self.phi.times

    def matrices(self) -> np.ndarray:
        return self.phi.values.reshape(-1, self.dim, self.dim)

    @classmethod
    def from_matrices(cls, times, phi, seed: int = 0, paths: int = 1) -> "NoiseSpec":
        phi = np.asarray(phi, dtype=float)
        n = phi.shape[0]
        return cls(GridPath(times, phi.reshape(n, -1)), seed, paths)

    @classmethod
    def brownian(cls, times, d: int, seed: int = 0, paths: int = 1) -> "NoiseSpec":
        times = np.asarray(times, dtype=float)
        return cls.from_matrices(times, np.broadcast_to(np.eye(d), (times.size, d, d)), seed, paths)

    @classmethod
    def zero(cls, times, d: int, seed: int = 0, paths: int = 1) -> "NoiseSpec":
        times = np.asarray(times, dtype=float)
        return cls.from_matrices(times, np.zeros((times.size, d, d)), seed, paths)


@dataclass(frozen=True, eq=False)
class PerturbedLift:
    """gamma + S_2(M) with its parts kept apart.

    ``cross`` is the level-2 grid of int x (x) o dM + int M (x) o dx
    (trapezoid sums, x = pi_1(gamma)), starting at 0.
    """

    base: RoughPathGrid
    noise: RoughPathGrid
    cross: np.ndarray

    @property
    def combined(self) -> RoughPathGrid:
        return RoughPathGrid(
            self.base.times,
            self.base.level1 + self.noise.level1,
            self.base.level2 + self.noise.level2 + self.cross,
        )


# ---------------------------------------------------------------- sampling

def _check_grid(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 2 or not np.all(np.diff(t) > 0):
        raise InvalidArgumentError("grid must be strictly increasing with >= 2 points")
    return t


def brownian_increments(times, d: int, seed: int, count: int = 1, start: int = 0,
                        key: tuple = ()) -> np.ndarray:
    """Increments of ``count`` independent Brownian replicas, shape (count, N, d)."""
    t = _check_grid(times)
    z = normal_replicas(seed, (TAG_BROWNIAN,) + tuple(key), count, (t.size - 1, d), start=start)
    return z * np.sqrt(np.diff(t))[None, :, None]


def cumulate(dx: np.ndarray) -> np.ndarray:
    """Path values from increments along axis -2, starting at 0."""
    lead = np.zeros(dx.shape[:-2] + (1, dx.shape[-1]))
    return np.concatenate([lead, np.cumsum(dx, axis=-2)], axis=-2)


def sample_brownian_batch(times, d: int, seed: int, count: int, start: int = 0,
                          key: tuple = ()) -> np.ndarray:
    return cumulate(brownian_increments(times, d, seed, count, start, key))


def sample_brownian(times, d: int, seed: int, replica: int = 0) -> GridPath:
    """Replica ``replica`` of a d-dimensional Brownian motion from 0."""
    t = _check_grid(times)
    return GridPath(t, sample_brownian_batch(t, d, seed, 1, start=replica)[0])


def phi_on_grid(spec: NoiseSpec, times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.shape != spec.times.shape or not np.array_equal(t, spec.times):
        raise InvalidArgumentError("phi is not defined on this grid")
    return spec.matrices()


def martingale_from_phi(spec: NoiseSpec, times, replica: int = 0) -> GridPath:
    """Left-point Ito sums M_{t_{i+1}} = M_{t_i} + phi_{t_i} (B_{t_{i+1}} - B_{t_i})."""
    phi = phi_on_grid(spec, times)
    db = brownian_increments(times, spec.dim, spec.seed, 1, start=replica)[0]
    dm = np.einsum("nij,nj->ni", phi[:-1], db)
    return GridPath(spec.times, cumulate(dm))


# ---------------------------------------------------------------- lifts

def ito_levels(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ito lift of paths z (..., N+1, d) as arrays (level1, level2 (..., N+1, d, d))."""
    x = z - z[..., :1, :]
    dx = np.diff(x, axis=-2)
    steps = x[..., :-1, :, None] * dx[..., None, :]
    return x, _cum_matrix(steps)


def strat_levels(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = z - z[..., :1, :]
    dx = np.diff(x, axis=-2)
    steps = (x[..., :-1, :] + 0.5 * dx)[..., :, None] * dx[..., None, :]
    return x, _cum_matrix(steps)


def _cum_matrix(steps: np.ndarray) -> np.ndarray:
    lead = np.zeros(steps.shape[:-3] + (1,) + steps.shape[-2:])
    return np.concatenate([lead, np.cumsum(steps, axis=-3)], axis=-3)


def ito_lift(z: GridPath) -> RoughPathGrid:
    """Level 2 by left-point sums on the path's own grid."""
    if len(z) < 2:
        raise InvalidArgumentError("need at least two grid points")
    return RoughPathGrid(z.times, *ito_levels(z.values))


def strat_lift(z: GridPath) -> RoughPathGrid:
    """Level 2 by trapezoid sums; the same as the depth-2 polygon signature."""
    if len(z) < 2:
        raise InvalidArgumentError("need at least two grid points")
    return RoughPathGrid(z.times, *strat_levels(z.values))


def partition_indices(times, part) -> np.ndarray:
    """Grid indices of a partition given either as indices or as time values."""
    t = np.asarray(times, dtype=float)
    part = np.asarray(part)
    if part.ndim != 1 or part.size < 2:
        raise InvalidArgumentError("a partition needs at least two points")
    if np.issubdtype(part.dtype, np.integer):
        idx = part.astype(int)
        if idx.min() < 0 or idx.max() >= t.size:
            raise InvalidArgumentError("partition index outside the grid")
    else:
        idx = np.searchsorted(t, part.astype(float))
        idx = np.clip(idx, 0, t.size - 1)
        if not np.array_equal(t[idx], part.astype(float)):
            raise InvalidArgumentError("partition is not a sub-grid of the path grid")
    if not np.all(np.diff(idx) > 0):
        raise InvalidArgumentError("partition must be strictly increasing")
    if idx[0] != 0 or idx[-1] != t.size - 1:
        raise InvalidArgumentError("partition must contain both grid end points")
    return idx


def dyadic_partition(n_steps: int, m: int) -> np.ndarray:
    """Indices of the dyadic partition with 2**m intervals of a grid with n_steps steps."""
    if m < 0 or n_steps % (2**m):
        raise InvalidArgumentError(f"{n_steps} steps cannot be split into 2**{m} intervals")
    return np.arange(0, n_steps + 1, n_steps // 2**m)


def chord_interpolate(times: np.ndarray, values: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Linear interpolation in time of values (..., N+1, k) between grid indices ``idx``."""
    n = times.size
    seg = np.clip(np.searchsorted(idx, np.arange(n), side="right") - 1, 0, idx.size - 2)
    a, b = idx[seg], idx[seg + 1]
    w = ((times - times[a]) / (times[b] - times[a]))[:, None]
    return values[..., a, :] + w * (values[..., b, :] - values[..., a, :])


def bracket_pl_levels(times: np.ndarray, z: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """<Z>^D on the full grid for paths z (..., N+1, d); shape (..., N+1, d, d)."""
    zd = z[..., idx, :]
    dz = np.diff(zd, axis=-2)
    q = _cum_matrix(dz[..., :, None] * dz[..., None, :])
    d = z.shape[-1]
    flat = np.zeros(z.shape[:-1] + (d * d,))
    flat[..., idx, :] = q.reshape(q.shape[:-2] + (d * d,))
    return chord_interpolate(times, flat, idx).reshape(z.shape[:-1] + (d, d))


def bracket_pl(z: GridPath, part) -> BracketGrid:
    """Bracket of the chord approximation on partition D, linear in time inside each interval."""
    idx = partition_indices(z.times, part)
    return BracketGrid(z.times, bracket_pl_levels(z.times, z.values, idx))


def bracket_fine(z: GridPath) -> BracketGrid:
    return bracket_pl(z, np.arange(len(z)))


def pl_ito_lift(z: GridPath, part) -> RoughPathGrid:
    """Polygon signature of the chord path Z^D minus half its bracket <Z>^D."""
    idx = partition_indices(z.times, part)
    chord = chord_interpolate(z.times, z.values, idx)
    sig = pl_signature(GridPath(z.times, chord), 2).to_rough_path()
    q = bracket_pl_levels(z.times, z.values, idx)
    return RoughPathGrid(z.times, sig.level1, sig.level2 - 0.5 * q)


def shift_level2(gamma: RoughPathGrid, q: BracketGrid, sign: int) -> RoughPathGrid:
    """Level 2 shifted by sign * Q / 2; level 1 unchanged."""
    if sign not in (1, -1):
        raise InvalidArgumentError("sign must be +1 or -1")
    if len(gamma) != len(q) or not np.array_equal(gamma.times, q.times):
        raise InvalidArgumentError("rough path and bracket must share a grid")
    if gamma.dim != q.dim:
        raise InvalidArgumentError("rough path and bracket dimensions differ")
    return RoughPathGrid(gamma.times, gamma.level1, gamma.level2 + 0.5 * sign * q.values)


def perturbed_increments(dx: np.ndarray, da: np.ndarray, dm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-step group increments of gamma + S_2(M).

    ``dx`` (N, d) and ``da`` (N, d, d) are the base increments; ``dm`` has
    shape (..., N, d). Trapezoid cross terms leave ``da + dM(x)dM/2 +
    (dx(x)dM + dM(x)dx)/2`` at level 2.
    """
    l1 = dx + dm
    l2 = (da + 0.5 * dm[..., :, None] * dm[..., None, :]
          + 0.5 * (dx[..., :, None] * dm[..., None, :] + dm[..., :, None] * dx[..., None, :]))
    return l1, l2


def perturbed_lift(gamma: RoughPathGrid, m: GridPath) -> PerturbedLift:
    if len(gamma) != len(m) or not np.array_equal(gamma.times, m.times):
        raise InvalidArgumentError("rough path and martingale must share a grid")
    if gamma.dim != m.dim:
        raise InvalidArgumentError("rough path and martingale dimensions differ")
    noise = strat_lift(m.shifted())
    x = gamma.level1
    mv = noise.level1
    dx = np.diff(x, axis=0)
    dm = np.diff(mv, axis=0)
    steps = ((x[:-1] + 0.5 * dx)[:, :, None] * dm[:, None, :]
             + (mv[:-1] + 0.5 * dm)[:, :, None] * dx[:, None, :])
    return PerturbedLift(gamma, noise, _cum_matrix(steps))


def psd_sqrt(q: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root of symmetric matrices (..., d, d); negative eigenvalues clip to 0."""
    sym = 0.5 * (q + np.swapaxes(q, -1, -2))
    w, v = np.linalg.eigh(sym)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w[..., None, :]) @ np.swapaxes(v, -1, -2)


def ztilde_phi(bracket: BracketGrid) -> np.ndarray:
    """psi_k = sqrt(Delta<Z>_k / Delta t_k) per fine step, shape (N+1, d, d); the last row repeats."""
    dq = bracket.increments()
    dt = np.diff(bracket.times)
    psi = psd_sqrt(dq / dt[:, None, None])
    return np.concatenate([psi, psi[-1:]], axis=0)


def ztilde_noise(bracket: BracketGrid, seed: int, paths: int) -> NoiseSpec:
    return NoiseSpec.from_matrices(bracket.times, ztilde_phi(bracket), seed, paths)


def noise_bracket(spec: NoiseSpec) -> BracketGrid:
    """<M> = sum phi phi^T dt on the noise grid."""
    phi = spec.matrices()
    dt = np.diff(spec.times)
    steps = np.einsum("nij,nkj->nik", phi[:-1], phi[:-1]) * dt[:, None, None]
    return BracketGrid(spec.times, _cum_matrix(steps))


def quadratic_variation(z: GridPath) -> np.ndarray:
    """Realised bracket <Z>_T on the full grid."""
    dz = z.increments()
    return dz.T @ dz
