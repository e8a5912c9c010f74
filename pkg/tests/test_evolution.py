import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from stochevol.errors import OrderingError, ParameterError, ShapeError
from stochevol.evolution import (
    FROZEN,
    IMPLICIT,
    EvolutionScheme,
    Trajectory,
    convolve,
    deterministic_solve,
    evolution_constants_scan,
    matrix_exponential,
    propagate,
)
from stochevol.operators import OperatorFamily
from stochevol.presets import autonomous_grid_problem, section4_problem
from stochevol.stochastic import time_grid

AUTO = autonomous_grid_problem().family
S4 = section4_problem(n=16).family

times = st.floats(0, 1, allow_nan=False)


@given(st.lists(times, min_size=3, max_size=3).map(sorted))
def test_cocycle_autonomous(rst):
    r, s, t = rst
    sch = EvolutionScheme(AUTO, FROZEN, 200)
    lhs = sch.propagator(r, t)
    rhs = sch.propagator(s, t) @ sch.propagator(r, s)
    assert AUTO.op_norm(lhs - rhs) < 1e-10


@given(st.integers(0, 64), st.integers(0, 64), st.integers(0, 64))
def test_cocycle_exact_on_global_grid(i, j, k):
    # substep nodes include the global grid, so cocycles between grid points are exact
    r, s, t = sorted((i / 64, j / 64, k / 64))
    sch = EvolutionScheme(S4, FROZEN, 64)
    assert S4.op_norm(sch.propagator(r, t) - sch.propagator(s, t) @ sch.propagator(r, s)) < 1e-12


def test_identity_and_ordering():
    sch = EvolutionScheme(S4, FROZEN, 100)
    np.testing.assert_array_equal(sch.propagator(0.3, 0.3), np.eye(16))
    v = np.arange(16.0)
    np.testing.assert_array_equal(propagate(sch, 0.4, 0.4, v), v)
    with pytest.raises(OrderingError):
        sch.propagator(0.5, 0.2)
    with pytest.raises(ParameterError):
        EvolutionScheme(S4, "euler", 10)
    with pytest.raises(ParameterError):
        EvolutionScheme(S4, FROZEN, 0)


def test_semigroup_matches_expm():
    sch = EvolutionScheme(AUTO, FROZEN, 1000)
    A = AUTO.matrix(0)
    for s, t in [(0, 0.37), (0.2, 0.9)]:
        np.testing.assert_allclose(sch.propagator(s, t), scipy.linalg.expm(-(t - s) * A), atol=1e-12)


def test_matrix_exponential_paths_agree(rng):
    M = rng.standard_normal((5, 5))
    S = M + M.T
    np.testing.assert_allclose(matrix_exponential(S), scipy.linalg.expm(S), rtol=1e-10)
    np.testing.assert_allclose(matrix_exponential(M), scipy.linalg.expm(M), rtol=1e-12)


def test_implicit_euler_factor():
    sch = EvolutionScheme(AUTO, IMPLICIT, 10)
    ref = np.linalg.inv(np.eye(8) + 0.1 * AUTO.matrix(0))
    np.testing.assert_allclose(sch.propagator(0.0, 0.1), ref, rtol=1e-10, atol=1e-14)


def test_implicit_converges_to_exponential():
    A = AUTO.matrix(0)
    ref = scipy.linalg.expm(-0.5 * A)
    errs = [np.linalg.norm(EvolutionScheme(AUTO, IMPLICIT, k).propagator(0, 0.5) - ref, 2) for k in (200, 400, 800)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    np.testing.assert_allclose(ratios, 2.0, rtol=0.1)


def test_commuting_family_oracle():
    # A(t) = c(t) A1 commutes, so U(t, s) = exp(-int_s^t c A1); frozen scheme is first order in the substep
    A1 = S4.matrix(0.0)
    exact = scipy.linalg.expm(-(1.0 + 0.25) * A1)  # int_0^1 (1 + r/2) dr = 1.25
    errs = [S4.op_norm(EvolutionScheme(S4, FROZEN, k).propagator(0.0, 1.0) - exact) for k in (100, 200, 400)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    np.testing.assert_allclose(orders, 1.0, atol=0.1)


def test_trajectory_is_read_only():
    tr = Trajectory([0.0, 1.0], np.zeros((2, 3)))
    with pytest.raises(ValueError):
        tr.states[0, 0] = 1.0
    with pytest.raises(ShapeError):
        Trajectory([0.0, 1.0], np.zeros((3, 3)))
    with pytest.raises(ShapeError):
        tr + Trajectory([0.0, 2.0], np.zeros((2, 3)))


def test_convolve_matches_explicit_sum(rng):
    mats = [np.diag(rng.uniform(0.5, 1, 3)) for _ in range(5)]
    inc = rng.standard_normal((5, 3))
    out = convolve(mats, np.ones(3), inc)
    # x_m = U(m,0) x0 + sum_k U(m,k) inc_k with U(m,k) = u_{m-1} ... u_k
    for m in range(6):
        ref = np.ones(3)
        for u in mats[:m]:
            ref = u @ ref
        for k in range(m):
            v = inc[k]
            for u in mats[k:m]:
                v = u @ v
            ref = ref + v
        np.testing.assert_allclose(out[m], ref, rtol=1e-12)


def test_deterministic_scalar_oracle():
    # x' = -a x + f with x(0) = 1: x(t) = e^{-a t} + f (1 - e^{-a t}) / a
    a, f = 2.0, 3.0
    fam = OperatorFamily.scalar(a)
    grid = time_grid(1.0, 1000)
    tr = deterministic_solve(EvolutionScheme(fam, FROZEN, 1000), [1.0], np.full((1001, 1), f), grid)
    exact = np.exp(-a * grid) + f * (1 - np.exp(-a * grid)) / a
    np.testing.assert_allclose(tr.states[:, 0], exact, atol=5e-3)
    with pytest.raises(ShapeError):
        deterministic_solve(EvolutionScheme(fam, FROZEN, 10), [1.0], np.ones((5, 1)), grid)


def test_smoothing_constants_autonomous_oracle():
    sch = EvolutionScheme(AUTO, FROZEN, 1000)
    pairs = [(0.0, t) for t in np.geomspace(1e-3, 1, 60)]
    c = evolution_constants_scan(sch, [0.0, 0.5, 1.0], pairs)
    assert c.iota[0.0] <= 1 + 1e-12
    for th in (0.5, 1.0):
        assert c.iota[th] == pytest.approx(th**th * np.exp(-th), rel=0.02)
        # kappa with theta1 = theta2 is iota
        assert c.kappa[(th, th)] == pytest.approx(c.iota[th], rel=1e-12)
    assert c.c_mu_nu < 1e-9


def test_constants_scan_validation():
    sch = EvolutionScheme(S4, FROZEN, 50)
    with pytest.raises(ParameterError):
        evolution_constants_scan(sch, [2.0], [(0, 1)])
    with pytest.raises(OrderingError):
        evolution_constants_scan(sch, [0.5], [(0.5, 0.5)])
    c = evolution_constants_scan(sch, [0.5], [(0.0, 0.5), (0.5, 1.0)])
    assert np.isfinite(c.c_mu_nu) and c.c_mu_nu > 0
    assert set(c.to_dict()) == {"iota", "kappa", "c_mu_nu", "scan_grid"}
