import numpy as np
import pytest

from roughito import (
    InvalidArgumentError,
    NoiseSpec,
    RoughPathGrid,
    SchemeConfig,
    TruncatedTensor,
    concat_discounted,
    convergence_study,
    expected_increment_inverse,
    ito_rough_driver,
    rde_solve,
    sample_brownian,
    strat_increment_pair,
    strat_lift,
)
from roughito.averaging import reference_solution
from roughito.fields import constant_field, scalar_linear, trig_field
from roughito.lifts import brownian_increments, dyadic_partition, noise_bracket
from roughito.tensor import max_abs_diff, tensor_inv

N_STEPS = 256
TIMES = np.linspace(0.0, 1.0, N_STEPS + 1)


def trivial(d=1, times=TIMES):
    n = times.size
    return RoughPathGrid(times, np.zeros((n, d)), np.zeros((n, d, d)))


def cfg_for(noise, m=3, samples=200, depth=2, **kw):
    return SchemeConfig(dyadic_partition(N_STEPS, m), samples, depth, noise, **kw)


def test_closed_form_product_oracle():
    # per interval the first level is multiplied by 2 - exp(h/2)
    noise = NoiseSpec.brownian(TIMES, 1, seed=1)
    for m in range(1, 9):
        out = concat_discounted(trivial(), scalar_linear(), [1.5],
                                cfg_for(noise, m, samples=1, depth=1, expectation_mode="closed-form-linear"))
        h = 2.0**-m
        assert out.levels[0][-1, 0] == pytest.approx(1.5 * (2 - np.exp(h / 2)) ** (2**m), rel=1e-12)


def test_closed_form_converges_first_order():
    noise = NoiseSpec.brownian(TIMES, 1, seed=1)
    errs = []
    for m in (4, 5, 6, 7, 8):
        out = concat_discounted(trivial(), scalar_linear(), [1.0],
                                cfg_for(noise, m, samples=1, depth=1, expectation_mode="closed-form-linear"))
        errs.append(abs(out.levels[0][-1, 0] - np.exp(-0.5)))
    ratios = np.array(errs[1:]) / np.array(errs[:-1])
    np.testing.assert_allclose(ratios, 0.5, atol=0.02)


def test_closed_form_agrees_with_monte_carlo():
    noise = NoiseSpec.brownian(TIMES, 1, seed=3, paths=4000)
    closed = concat_discounted(trivial(), scalar_linear(), [1.0],
                               cfg_for(noise, 2, samples=4000, depth=2, expectation_mode="closed-form-linear"))
    mc = concat_discounted(trivial(), scalar_linear(), [1.0], cfg_for(noise, 2, samples=4000, depth=2))
    for k in range(2):
        se = np.sum([np.max(s[k]) for s in mc.se])
        assert abs(mc.levels[k][-1, 0] - closed.levels[k][-1, 0]) < 4 * se


def test_closed_form_needs_scalar_linear_geometric():
    noise = NoiseSpec.brownian(TIMES, 1)
    with pytest.raises(InvalidArgumentError):
        concat_discounted(trivial(), trig_field(), [1.0], cfg_for(noise, expectation_mode="closed-form-linear"))
    g = ito_rough_driver(strat_lift(sample_brownian(TIMES, 1, 0)), noise_bracket(noise))
    with pytest.raises(InvalidArgumentError):
        concat_discounted(g, scalar_linear(), [1.0], cfg_for(noise, expectation_mode="closed-form-linear"))


def test_zero_noise_reproduces_stratonovich():
    z = sample_brownian(TIMES, 2, 4)
    g = strat_lift(z)
    vf = trig_field(2, 2)
    out = concat_discounted(g, vf, [0.1, -0.2], cfg_for(NoiseSpec.zero(TIMES, 2), m=4, depth=2))
    ref = rde_solve(g, vf, [0.1, -0.2], depth=2).group
    idx = dyadic_partition(N_STEPS, 4)
    for a, b in zip(out.levels, ref.levels):
        np.testing.assert_allclose(a, b[idx], atol=1e-12)


def test_constant_field_level1():
    z = sample_brownian(TIMES, 1, 2)
    g = strat_lift(z)
    c = 0.8
    out = concat_discounted(g, constant_field([[c]]), [0.0], cfg_for(NoiseSpec.brownian(TIMES, 1, 5), m=3,
                                                                     samples=2000, depth=1))
    idx = dyadic_partition(N_STEPS, 3)
    want = c * g.level1[idx, 0]
    h = 1.0 / 8
    # only the sample mean of the noise increments survives
    assert np.max(np.abs(np.diff(out.levels[0][:, 0] - want))) < 4 * c * np.sqrt(h / 2000)


def test_increment_pair_cases():
    z = sample_brownian(TIMES, 1, 7)
    g = strat_lift(z)
    state = TruncatedTensor.from_levels([[0.4], [0.08]])
    vf = trig_field()
    dm0 = np.zeros((3, 32, 1))
    inc1, inc2 = strat_increment_pair(0, state, g, vf, dm0, 0, 32)
    for a, b in zip(inc1, inc2):
        np.testing.assert_allclose(b, np.broadcast_to(a, b.shape), atol=1e-15)
    dm = brownian_increments(TIMES[:33], 1, 3, count=3)
    inc1, inc2 = strat_increment_pair(0, state, g, constant_field([[0.0]]), dm, 0, 32)
    assert all(np.all(lv == 0.0) for lv in inc1 + inc2)


def test_linear_replica_increment_is_exponential():
    t = np.linspace(0.0, 1.0, 4097)
    dm = brownian_increments(t[:1025], 1, 3, count=5)
    state = TruncatedTensor.from_levels([[2.0]])
    _, inc2 = strat_increment_pair(0, state, trivial(1, t), scalar_linear(), dm, 0, 1024)
    want = 2.0 * (np.exp(dm.sum(axis=1)[:, 0]) - 1.0)
    np.testing.assert_allclose(inc2[0][:, 0], want, rtol=1e-3)


def test_expected_increment_inverse_cases(rng):
    g = TruncatedTensor.from_levels([[0.3, -0.1], rng.normal(size=4)])
    same = [np.broadcast_to(lv, (7,) + lv.shape) for lv in g.levels]
    inv, _ = expected_increment_inverse(0, same)
    assert max_abs_diff(TruncatedTensor.from_levels(inv), tensor_inv(g)) < 1e-14
    single = [lv[None] for lv in g.levels]
    inv, _ = expected_increment_inverse(0, single)
    assert max_abs_diff(TruncatedTensor.from_levels(inv), tensor_inv(g)) < 1e-15


def test_mean_level1_factor_lognormal():
    h = 1.0 / 8
    n = 20_000
    t = np.linspace(0.0, 1.0, 2049)
    dm = brownian_increments(t[:257], 1, 21, count=n)
    _, inc2 = strat_increment_pair(0, TruncatedTensor.from_levels([[1.0]]), trivial(1, t), scalar_linear(), dm, 0, 256)
    x = inc2[0][:, 0]
    assert abs(x.mean() - (np.exp(h / 2) - 1)) < 3 * x.std() / np.sqrt(n)


def test_schemes_are_deterministic():
    z = sample_brownian(TIMES, 1, 9)
    noise = NoiseSpec.brownian(TIMES, 1, 5)
    cfg = cfg_for(noise, m=3, samples=150, depth=2)
    a = concat_discounted(strat_lift(z), trig_field(), [0.2], cfg)
    b = concat_discounted(strat_lift(z), trig_field(), [0.2], cfg)
    for x, y in zip(a.levels, b.levels):
        np.testing.assert_array_equal(x, y)


def test_config_validation():
    noise = NoiseSpec.brownian(TIMES, 1)
    with pytest.raises(InvalidArgumentError):
        cfg_for(noise, samples=50)
    with pytest.raises(InvalidArgumentError):
        cfg_for(noise, coupling="antithetic")
    with pytest.raises(InvalidArgumentError):
        cfg_for(noise, expectation_mode="exact")


def test_value_is_piecewise_constant():
    out = concat_discounted(trivial(), scalar_linear(), [1.0],
                            cfg_for(NoiseSpec.brownian(TIMES, 1), 1, samples=1, depth=1,
                                    expectation_mode="closed-form-linear"))
    assert out.value(0.25).levels[0][0] == out.levels[0][1, 0]
    assert out.value(0.5).levels[0][0] == out.levels[0][1, 0]
    assert out.value(0.75).levels[0][0] == out.levels[0][2, 0]


def test_zero_noise_error_is_strat_ito_gap():
    z = sample_brownian(TIMES, 1, 9)
    g = strat_lift(z)
    vf = trig_field()
    cfg = cfg_for(NoiseSpec.zero(TIMES, 1), depth=1)
    rows = convergence_study(g, vf, [0.2], cfg, ms=(2, 3))
    # reference with zero bracket is the Stratonovich solution itself
    assert all(r["error"] < 1e-12 for r in rows)
    shifted = reference_solution(g, vf, [0.2], cfg_for(NoiseSpec.brownian(TIMES, 1), depth=1))
    rows = convergence_study(g, vf, [0.2], cfg, ms=(2, 3), reference=shifted)
    gap = [np.max(np.abs(rde_solve(g, vf, [0.2]).first_level.values[dyadic_partition(N_STEPS, m)]
                         - shifted.first_level.values[dyadic_partition(N_STEPS, m)])) for m in (2, 3)]
    np.testing.assert_allclose([r["error"] for r in rows], gap, atol=1e-12)
