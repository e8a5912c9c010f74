import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochevol.errors import HypothesisError, ShapeError
from stochevol.evolution import FROZEN, IMPLICIT, EvolutionScheme
from stochevol.presets import autonomous_grid_problem, low_beta_problem, scalar_ou_problem, section4_problem
from stochevol.solver import (
    ProblemSpec,
    cross_scheme_distance,
    fubini_defect,
    solve_batch,
    strict_residual,
    strict_solve,
)
from stochevol.stochastic import NoiseMap, sample_brownian, sample_brownian_batch, time_grid


def _spec(**kw):
    base = dict(family=scalar_ou_problem().family, forcing=lambda t: np.zeros(1), beta=1.0, sigma=0.3,
                noise=NoiseMap(lambda t: np.ones((1, 1))), delta=0.75, xi=np.zeros(1))
    base.update(kw)
    return ProblemSpec(**base)


@pytest.mark.parametrize("kw, cond", [
    ({"sigma": 1.0}, "(F1)"),
    ({"beta": 0.3, "sigma": 0.4}, "(F1)"),
    ({"beta": 1.5}, "(F1)"),
    ({"delta": 0.5}, "(G1)"),
    ({"delta": 0.8, "delta1": 0.7}, "(G2)"),
])
def test_hypotheses_are_named(kw, cond):
    with pytest.raises(HypothesisError) as info:
        _spec(**kw)
    assert info.value.condition == cond


def test_initial_value_shape():
    with pytest.raises(ShapeError):
        _spec(xi=np.zeros(2))


def test_solution_decomposes():
    prob = section4_problem(n=8)
    g = time_grid(1.0, 64)
    inc = sample_brownian_batch(1, g, 4, 3)
    X, I1, W0 = solve_batch(prob, EvolutionScheme(prob.family, FROZEN, 64), g, inc)
    np.testing.assert_allclose(X, I1[None] + W0, rtol=0, atol=0)
    assert X.shape == (3, 65, 8)


@given(st.floats(-3, 3))
def test_stochastic_part_is_linear_in_noise(c):
    base = autonomous_grid_problem(g=1.0)
    scaled = autonomous_grid_problem(g=c)
    g = time_grid(1.0, 16)
    inc = sample_brownian_batch(1, g, 0, 2)
    w1 = solve_batch(base, EvolutionScheme(base.family, FROZEN, 16), g, inc)[2]
    wc = solve_batch(scaled, EvolutionScheme(scaled.family, FROZEN, 16), g, inc)[2]
    np.testing.assert_allclose(wc, c * w1, atol=1e-12)


def test_ou_discrete_variance_oracle():
    a, M = 1.0, 16
    prob = scalar_ou_problem(a=a)
    g = time_grid(1.0, M)
    dt = 1 / M
    inc = sample_brownian_batch(1, g, 21, 40000)
    X = solve_batch(prob, EvolutionScheme(prob.family, FROZEN, M), g, inc)[0][:, -1, 0]
    exact = dt * np.exp(-2 * a * dt) * (1 - np.exp(-2 * a)) / (1 - np.exp(-2 * a * dt))
    se = np.std(X**2) / np.sqrt(X.size)
    assert abs(np.mean(X**2) - exact) < 4 * se


def test_deterministic_case_has_exact_fubini_and_small_residual():
    prob = autonomous_grid_problem(forcing=1.0, xi_mode=1, noise=False)
    res = []
    for M in (64, 128, 256):
        path = sample_brownian(1, time_grid(1.0, M), 0)
        sol = strict_solve(prob, path, EvolutionScheme(prob.family, FROZEN, M))
        assert fubini_defect(sol) == 0.0
        assert sol.W0.states.max() == 0
        res.append(strict_residual(prob, sol))
    ratios = np.array(res[:-1]) / np.array(res[1:])
    np.testing.assert_allclose(ratios, 2.0, rtol=0.15)


def test_strict_solve_pieces_are_tagged():
    prob = section4_problem(n=8)
    path = sample_brownian(1, time_grid(1.0, 32), 2)
    sol = strict_solve(prob, path, EvolutionScheme(prob.family, IMPLICIT, 32))
    assert sol.scheme_tag == "implicit-euler/32"
    assert (sol.X.piece, sol.I1.piece, sol.W0.piece, sol.W1.piece) == ("full", "I1", "W0", "W1")
    ref = np.array([prob.family.matrix(t) @ w for t, w in zip(path.times, sol.W0.states)])
    np.testing.assert_allclose(sol.W1.states, ref, rtol=1e-12, atol=1e-12)


def test_strict_solve_restricts_fine_path():
    prob = scalar_ou_problem()
    fine = sample_brownian(1, time_grid(1.0, 64), 8)
    a = strict_solve(prob, fine, EvolutionScheme(prob.family, FROZEN, 16), grid=time_grid(1.0, 16))
    b = strict_solve(prob, fine.coarsen(4), EvolutionScheme(prob.family, FROZEN, 16))
    np.testing.assert_allclose(a.X.states, b.X.states, atol=1e-14)
    with pytest.raises(ShapeError):
        strict_solve(prob, sample_brownian(2, time_grid(1.0, 4), 0), EvolutionScheme(prob.family))


def test_singular_forcing_left_value():
    prob = low_beta_problem(n=8, f={"form": "power", "c0": 0.0, "c1": 1.0, "p": "beta-1"})
    F = prob.forcing_on(time_grid(1.0, 4))
    np.testing.assert_allclose(F[0], prob.forcing(0.125))
    assert np.all(np.isfinite(F))


def test_cross_scheme_distance_shrinks():
    prob = section4_problem(n=16)
    path = sample_brownian(1, time_grid(1.0, 512), 1)
    d = [cross_scheme_distance(prob, path, grid=time_grid(1.0, m)) for m in (128, 256, 512)]
    assert d[0] > d[1] > d[2] > 0


def test_digest_is_stable_and_sensitive():
    assert section4_problem(n=8).digest() == section4_problem(n=8).digest()
    assert section4_problem(n=8).digest() != section4_problem(n=8, sigma=0.2).digest()
