import numpy as np
import pytest

from conftest import all_partitions_sup
from roughito import GridPath, InvalidArgumentError, RoughPathGrid, dp_distance, infinity_variation, p_variation
from roughito import variation
from roughito.lifts import ito_lift, strat_lift
from roughito.paths import pl_signature
from roughito.tensor import homogeneous_norm_levels, inv_levels, mul_levels

BACKENDS = ["python"] + (["cython"] if variation.BACKEND == "cython" else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    old = variation.BACKEND
    variation.use_backend(request.param)
    yield request.param
    variation.use_backend(old)


def path1d(vals):
    return GridPath(np.arange(len(vals), dtype=float), np.asarray(vals, dtype=float))


def test_monotone_path(backend):
    for p in (1.0, 2.0, 2.5, 7.0):
        assert p_variation(path1d([0.0, 1.0, 2.0]), p) == pytest.approx(2.0)


def test_up_down_path(backend):
    assert p_variation(path1d([0.0, 1.0, 0.0]), 2.0) == pytest.approx(np.sqrt(2.0))


def test_constant_path(backend):
    assert p_variation(path1d([3.0] * 5), 2.5) == 0.0


def test_vector_path_against_enumeration(backend, rng):
    for _ in range(10):
        n = int(rng.integers(2, 10))
        x = rng.normal(size=(n, 2))
        p = float(rng.uniform(1.0, 4.0))
        want = all_partitions_sup(x, p, lambda i, j: np.linalg.norm(x[j] - x[i]))
        assert p_variation(GridPath(np.arange(n, dtype=float), x), p) == pytest.approx(want ** (1 / p), abs=1e-12)


def test_rough_path_against_enumeration(backend, rng):
    for _ in range(10):
        n = int(rng.integers(2, 9))
        g = ito_lift(GridPath(np.arange(n, dtype=float), rng.normal(size=(n, 2))))
        x1, x2 = g.level1, g.level2

        def w(i, j):
            # closed-form depth-2 increment; a group product would leave O(1e-16)
            # residue in zero level-2 entries, which the 1/2 power inflates
            dx = x1[j] - x1[i]
            da = x2[j] - x2[i] - np.outer(x1[i], dx)
            return np.linalg.norm(dx) + np.sqrt(np.linalg.norm(da))

        p = 2.5
        want = all_partitions_sup(g.level1, p, w) ** (1 / p)
        assert p_variation(g, p) == pytest.approx(want, abs=1e-12)


def test_depth3_generic_against_enumeration(rng):
    x = GridPath(np.arange(6.0), rng.normal(size=(6, 2)))
    s = pl_signature(x, 3)

    def w(i, j):
        inc = mul_levels(inv_levels([lv[i] for lv in s.levels]), [lv[j] for lv in s.levels])
        return float(homogeneous_norm_levels(inc))

    want = all_partitions_sup(s.levels[0], 3.5, w) ** (1 / 3.5)
    assert p_variation(s, 3.5) == pytest.approx(want, abs=1e-12)


def test_level_selection(backend, rng):
    z = GridPath(np.arange(7.0), rng.normal(size=(7, 2)))
    g = ito_lift(z)
    assert p_variation(g, 2.0, level=1) == pytest.approx(p_variation(z, 2.0), abs=1e-13)
    with pytest.raises(InvalidArgumentError):
        p_variation(g, 2.0, level=3)
    with pytest.raises(InvalidArgumentError):
        p_variation(z, 0.5)


def test_infinity_variation():
    assert infinity_variation(path1d([0.0, 2.0, -1.0, 0.5])) == pytest.approx(3.0)
    assert p_variation(path1d([0.0, 2.0, -1.0]), np.inf) == pytest.approx(3.0)


def test_backends_agree(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernel not built")
    z = GridPath(np.linspace(0, 1, 120), np.cumsum(rng.normal(size=(120, 2)), axis=0))
    g, h = ito_lift(z), strat_lift(z)
    old = variation.BACKEND
    out = {}
    for name in BACKENDS:
        variation.use_backend(name)
        out[name] = (p_variation(z, 2.5), p_variation(g, 2.5), dp_distance(g, h, 2.5))
    variation.use_backend(old)
    np.testing.assert_allclose(out["python"], out["cython"], rtol=1e-13)


def test_dp_distance_properties(backend, rng):
    n = 8
    z = GridPath(np.arange(n, dtype=float), rng.normal(size=(n, 2)))
    g, h = ito_lift(z), strat_lift(z)
    assert dp_distance(g, g, 2.5) == 0.0
    assert dp_distance(g, h, 2.5) == pytest.approx(dp_distance(h, g, 2.5), abs=1e-14)


def test_dp_distance_level1_shift(backend):
    # a constant slope added on one interval only moves level 1 there
    t = np.arange(5.0)
    base = np.zeros((5, 1))
    bumped = base.copy()
    bumped[3:] += 0.7
    g = RoughPathGrid(t, base, np.zeros((5, 1, 1)))
    h = RoughPathGrid(t, bumped, 0.5 * bumped[:, :, None] ** 2)
    diff = GridPath(t, bumped - base)
    # level 2 difference is (0.7^2 / 2) on the same interval, smaller after the 1/2 power
    want = max(p_variation(diff, 2.5), (0.5 * 0.49) ** 0.5)
    assert dp_distance(g, h, 2.5) == pytest.approx(want, abs=1e-14)


def test_dp_distance_grid_mismatch():
    g = RoughPathGrid([0.0, 1.0], np.zeros((2, 1)), np.zeros((2, 1, 1)))
    h = RoughPathGrid([0.0, 2.0], np.zeros((2, 1)), np.zeros((2, 1, 1)))
    with pytest.raises(InvalidArgumentError):
        dp_distance(g, h, 2.5)
