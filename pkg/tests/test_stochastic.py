import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochevol.errors import InsufficientDataError, OrderingError, ParameterError, ShapeError
from stochevol.evolution import FROZEN, EvolutionScheme
from stochevol.presets import autonomous_grid_problem, section4_problem
from stochevol.stochastic import (
    BrownianPath,
    NoiseMap,
    apply_power,
    batch_stats,
    brownian_increments,
    ito_integral,
    moment_diagnostics,
    noise_condition_check,
    rng_for,
    sample_brownian,
    sample_brownian_batch,
    stochastic_convolution,
    time_grid,
)

GRID = time_grid(1.0, 64)


@given(st.integers(0, 2**63), st.integers(0, 10**6))
def test_stream_depends_only_on_key(seed, idx):
    a = brownian_increments(2, GRID, seed, idx)
    b = brownian_increments(2, GRID, seed, idx)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, brownian_increments(2, GRID, seed, idx + 1))


def test_batch_split_invariance():
    whole = sample_brownian_batch(1, GRID, 9, 10)
    parts = np.concatenate([sample_brownian_batch(1, GRID, 9, 4), sample_brownian_batch(1, GRID, 9, 6, start=4)])
    np.testing.assert_array_equal(whole, parts)
    np.testing.assert_array_equal(whole[3], sample_brownian(1, GRID, 9, 3).increments)


def test_restrict_sums_increments():
    p = sample_brownian(1, GRID, 3)
    c = p.coarsen(4)
    np.testing.assert_allclose(c.values[:, 0], p.values[::4, 0], atol=1e-14)
    with pytest.raises(ShapeError):
        p.restrict_to(np.linspace(0, 1, 7))


def test_brownian_increment_variance():
    inc = sample_brownian_batch(1, time_grid(1.0, 16), 0, 20000)
    np.testing.assert_allclose(inc.var(axis=0)[:, 0], 1 / 16, rtol=0.06)
    w1 = inc.sum(axis=1)[:, 0]
    assert abs(w1.mean()) < 4 / np.sqrt(20000)


def test_rng_is_philox():
    assert isinstance(rng_for(1, 2).bit_generator, np.random.Philox)


def test_grid_and_shape_validation():
    with pytest.raises(OrderingError):
        brownian_increments(1, [0.0, 0.5, 0.4], 0)
    with pytest.raises(ParameterError):
        brownian_increments(0, GRID, 0)
    with pytest.raises(ShapeError):
        BrownianPath(2, GRID, np.zeros((64, 1)))


def test_ito_integral_of_constant_is_scaled_endpoint():
    p = sample_brownian(1, GRID, 5)
    np.testing.assert_allclose(ito_integral(np.full(64, 2.0), p), 2 * p.values[-1], rtol=1e-12)
    with pytest.raises(ShapeError):
        ito_integral(np.ones(10), p)


def test_noise_map_shapes():
    nm = NoiseMap.separable(lambda t: 1 + t, np.ones(4))
    assert nm(0.5).shape == (4, 1)
    np.testing.assert_allclose(nm(0.5), 1.5)
    assert NoiseMap.zero(3, 2).sample([0.0, 1.0]).shape == (2, 3, 2)


def test_convolution_methods_agree():
    prob = section4_problem(n=8)
    sch = EvolutionScheme(prob.family, FROZEN, 32)
    g = time_grid(1.0, 32)
    path = sample_brownian(1, g, 11)
    for theta in (0.0, 0.5, 1.0):
        a = stochastic_convolution(sch, prob.noise, path, theta)
        b = stochastic_convolution(sch, prob.noise, path, theta, method="direct")
        np.testing.assert_allclose(a.states, b.states, rtol=1e-9, atol=1e-12)
    with pytest.raises(ParameterError):
        stochastic_convolution(sch, prob.noise, path, 1.5)


def test_apply_power_identity():
    fam = section4_problem(n=8).family
    x = np.random.default_rng(0).standard_normal((3, 8))
    t = [0.0, 0.5, 1.0]
    np.testing.assert_allclose(apply_power(fam, t, x, 0.0), x)
    y = apply_power(fam, t, apply_power(fam, t, x, 0.5), 0.5)
    np.testing.assert_allclose(y, apply_power(fam, t, x, 1.0), rtol=1e-9)


def test_batch_stats_oracle():
    v = np.repeat(np.arange(4.0), 5)
    mean, se = batch_stats(v, 4)
    assert mean == pytest.approx(1.5)
    assert se == pytest.approx(np.std(np.arange(4.0), ddof=1) / 2)


def test_isometry_deterministic_integrand():
    diag = moment_diagnostics(lambda t, w: t, 4000, 2.0, time_grid(1.0, 100), seed=3)
    # both sides estimate sum t_k^2 dt; the right side is deterministic
    assert diag.rhs_isometry == pytest.approx(sum((k / 100) ** 2 / 100 for k in range(100)))
    assert abs(diag.lhs_isometry - diag.rhs_isometry) < 4 * diag.lhs_se
    assert diag.martingale_ok
    # Doob: E sup |M|^2 <= 4 E |M_T|^2
    assert diag.bdg_ratio < 4


def test_isometry_zero_integrand():
    diag = moment_diagnostics(lambda t, w: 0.0, 1000, 2.0, time_grid(1.0, 10))
    assert diag.exact_zero and diag.martingale_ok


def test_moment_diagnostics_validation():
    with pytest.raises(InsufficientDataError):
        moment_diagnostics(lambda t, w: t, 10, 2.0, GRID)
    with pytest.raises(ParameterError):
        moment_diagnostics(lambda t, w: t, 2000, 1.0, GRID)


def test_noise_conditions_constant_noise():
    prob = autonomous_grid_problem()
    rep = noise_condition_check(prob.noise, prob.family, 0.7, 0.9, 0.3, time_grid(1.0, 16))
    assert rep.zeta_hat == 0 and rep.zeta_bar_hat == 0 and rep.derived_g1_constant == 0
    assert rep.g1_holds and rep.g2_holds
    assert rep.g0_delta_norm > 0


def test_noise_conditions_derived_dominates():
    prob = section4_problem(n=16)
    rep = noise_condition_check(prob.noise, prob.family, 0.7, 0.9, 0.3, time_grid(1.0, 16))
    assert np.isfinite(rep.derived_g1_constant)
    assert rep.derived_g1_constant >= rep.zeta_hat
    with pytest.raises(ParameterError):
        noise_condition_check(prob.noise, prob.family, 0.9, 0.7, 0.3, time_grid(1.0, 16))
