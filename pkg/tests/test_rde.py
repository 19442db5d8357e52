import numpy as np
import pytest

from roughito import (
    DivergedError,
    GridPath,
    InvalidArgumentError,
    RoughPathGrid,
    TruncatedTensor,
    UnsupportedFieldError,
    VectorField,
    dff,
    enhance_solution,
    get_field,
    ito_lift,
    rde_solve,
    rough_integral_one_form,
    sample_brownian,
    sde_euler_maruyama,
    strat_lift,
)
from roughito.fields import check_derivatives, constant_field, linear_field, polyclip_field, scalar_linear, trig_field
from roughito.paths import pl_signature
from roughito.rde import OneForm

GRID = np.linspace(0.0, 1.0, 10_001)


def test_dff_examples():
    y = np.array([0.7])
    np.testing.assert_allclose(dff(scalar_linear(1.0), y), [[[0.7]]])
    assert np.all(dff(constant_field([[1.0, 2.0]]), y) == 0.0)
    sin = trig_field()
    ys = np.linspace(-2, 2, 9)[:, None]
    np.testing.assert_allclose(dff(sin, ys)[:, 0, 0, 0], np.cos(ys[:, 0]) * np.sin(ys[:, 0]), atol=1e-15)
    h = 1e-6
    fd = (sin.f(ys + h) - sin.f(ys - h))[:, 0, 0] / (2 * h) * sin.f(ys)[:, 0, 0]
    np.testing.assert_allclose(dff(sin, ys)[:, 0, 0, 0], fd, atol=1e-6)


@pytest.mark.parametrize("vf", [trig_field(2, 3), polyclip_field(2, 2), linear_field(np.ones((2, 2, 2)))])
def test_builtin_derivatives(vf):
    check_derivatives(vf)


def test_missing_derivative():
    vf = VectorField(1, 1, lambda y: np.asarray(y)[..., :, None])
    with pytest.raises(UnsupportedFieldError):
        dff(vf, np.zeros(1))


def test_staircase_orientation():
    # non-commuting nilpotent field: one coarse step over the staircase
    # e1 then e2 must give exp(A2) exp(A1) y0 exactly
    a1 = np.array([[0.0, 1.0], [0.0, 0.0]])
    a2 = np.array([[0.0, 0.0], [1.0, 0.0]])
    vf = linear_field([a1, a2])
    stair = pl_signature(GridPath([0, 1, 2], [[0, 0], [1, 0], [1, 1]]), 2).to_rough_path()
    coarse = stair.restrict([0, 2])
    y0 = np.array([1.0, 2.0])
    np.testing.assert_allclose(rde_solve(coarse, vf, y0).terminal, [3.0, 5.0], atol=1e-15)
    np.testing.assert_allclose(rde_solve(stair, vf, y0).terminal, [3.0, 5.0], atol=1e-15)


def test_zero_field_is_constant():
    g = ito_lift(sample_brownian(GRID[:101], 2, 0))
    vf = constant_field(np.zeros((3, 2)))
    sol = rde_solve(g, vf, [1.0, 2.0, 3.0])
    assert np.all(sol.first_level.values == [1.0, 2.0, 3.0])
    em = sde_euler_maruyama(sample_brownian(GRID[:101], 2, 0), vf, [1.0, 2.0, 3.0])
    assert np.all(em.values == [1.0, 2.0, 3.0])


def test_gbm_ito_and_stratonovich():
    errs_i, errs_s = [], []
    for r in range(10):
        z = sample_brownian(GRID, 1, 31, r)
        bt = z.values[-1, 0]
        errs_i.append(abs(rde_solve(ito_lift(z), scalar_linear(), [1.0]).terminal[0] / np.exp(bt - 0.5) - 1))
        errs_s.append(abs(rde_solve(strat_lift(z), scalar_linear(), [1.0]).terminal[0] / np.exp(bt) - 1))
    assert np.median(errs_i) <= 1e-2
    assert np.median(errs_s) <= 1e-2


def test_euler_maruyama_matches_ito_rde():
    z = sample_brownian(GRID[:2001], 1, 2, 0)
    vf = trig_field()
    em = sde_euler_maruyama(z, vf, [0.3])
    rd = rde_solve(ito_lift(z), vf, [0.3])
    assert np.max(np.abs(em.values - rd.first_level.values)) < 2e-2


def test_ode_mode_close_to_euler():
    z = sample_brownian(GRID[:2001], 2, 2, 0)
    g = strat_lift(z)
    vf = trig_field(2, 2)
    a = rde_solve(g, vf, [0.1, 0.2]).terminal
    b = rde_solve(g, vf, [0.1, 0.2], mode="ode-approx").terminal
    np.testing.assert_allclose(a, b, atol=5e-2)
    with pytest.raises(InvalidArgumentError):
        rde_solve(g, vf, [0.1, 0.2], mode="rk9")


def test_enhancement_of_geometric_driver(rng):
    z = GridPath(np.linspace(0, 1, 50), 0.3 * np.cumsum(rng.normal(size=(50, 2)), axis=0))
    g = strat_lift(z)
    vf = trig_field(2, 2)
    sol = rde_solve(g, vf, [0.0, 0.0], depth=3)
    ref = pl_signature(sol.first_level, 3)
    for a, b in zip(sol.group.levels, ref.levels):
        np.testing.assert_allclose(a, b, atol=1e-12)
    one = enhance_solution(sol.first_level, g, vf, TruncatedTensor.from_levels([[0.0, 0.0]]), 1)
    np.testing.assert_allclose(one.levels[0], sol.first_level.values)


def test_enhancement_ito_double_integral():
    z = sample_brownian(GRID, 1, 5, 3)
    sol = rde_solve(ito_lift(z), scalar_linear(), [1.0], depth=2)
    y = sol.first_level.values[:, 0]
    riemann = np.sum((y[:-1] - y[0]) * np.diff(y))
    got = sol.group.levels[1][-1, 0] - y[0] * (y[-1] - y[0])
    assert got == pytest.approx(riemann, rel=2e-2)


def test_one_form_integrals():
    z = sample_brownian(GRID, 1, 9, 0)
    g = ito_lift(z)
    c = OneForm(1, 2, lambda x: np.broadcast_to([[2.0], [-1.0]], x.shape[:-1] + (2, 1)),
                lambda x: np.zeros(x.shape[:-1] + (2, 1, 1)))
    out = rough_integral_one_form(c, g)
    np.testing.assert_allclose(out.level1[-1], np.array([2.0, -1.0]) * z.values[-1, 0], atol=1e-12)
    ident = linear_field([[[1.0]]])
    bt = z.values[-1, 0]
    qv = float(np.sum(np.diff(z.values[:, 0]) ** 2))
    ito = rough_integral_one_form(ident, g).level1[-1, 0]
    assert ito == pytest.approx(0.5 * (bt * bt - qv), abs=1e-12)
    # realised vs nominal bracket: sd of (sum dB^2 - 1) / 2 is sqrt(2 / N) / 2
    assert ito == pytest.approx(0.5 * (bt * bt - 1.0), abs=1.5 * np.sqrt(2.0 / (GRID.size - 1)))
    strat = rough_integral_one_form(ident, strat_lift(z)).level1[-1, 0]
    assert strat == pytest.approx(0.5 * bt * bt, rel=1e-2)
    with pytest.raises(InvalidArgumentError):
        rough_integral_one_form(constant_field([[2.0], [-1.0]]), g)


def test_blow_up_reported():
    t = np.linspace(0, 1, 200)
    g = strat_lift(GridPath(t, 5.0 * np.sqrt(t)[:, None] * np.arange(200)[:, None] / 20))
    with pytest.raises(DivergedError) as info:
        rde_solve(g, get_field("linear1d", a=40.0), [1.0])
    assert info.value.time is not None


def test_dimension_mismatch():
    g = RoughPathGrid([0.0, 1.0], np.zeros((2, 2)), np.zeros((2, 2, 2)))
    with pytest.raises(InvalidArgumentError):
        rde_solve(g, scalar_linear(), [1.0])
    with pytest.raises(InvalidArgumentError):
        rde_solve(ito_lift(sample_brownian([0.0, 1.0], 1, 0)), scalar_linear(), [1.0, 2.0])


def test_field_registry():
    assert get_field("gbm").meta["scalar_linear"]
    with pytest.raises(InvalidArgumentError):
        get_field("nope")
