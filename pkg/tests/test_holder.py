import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochevol.errors import InsufficientDataError, OrderingError, ParameterError
from stochevol.holder import (
    SampledPath,
    WeightedHolderParams,
    check_weighted_membership,
    holder_norm,
    holder_seminorm,
    weighted_holder_norm,
    weighted_modulus,
)
from stochevol.operators import OperatorFamily

UNIFORM = np.linspace(0, 1, 65)
GEOMETRIC = 2.0 ** -np.arange(40, -1, -1)


def test_weighted_norm_of_identity_oracle():
    # f(t) = t, beta = 1, sigma = 1/2: sup s^{1/2} (t - s)^{1/2} = t / 2, so the norm is 1 + 1/2
    rep = weighted_holder_norm(SampledPath(UNIFORM, UNIFORM), WeightedHolderParams(1.0, 0.5))
    assert rep.sup_term == pytest.approx(1.0)
    assert rep.holder_term == pytest.approx(0.5, rel=1e-12)
    assert rep.norm == pytest.approx(1.5)


def test_constant_path_has_zero_modulus():
    rep = weighted_holder_norm(SampledPath(UNIFORM, np.ones_like(UNIFORM)), WeightedHolderParams(1.0, 0.3))
    assert rep.holder_term == 0
    assert rep.passes == (True, True, True)


def test_singular_power_has_scale_invariant_modulus():
    # t^{beta-1} has w_f(t) = w_f(1) for all t, so the modulus does not vanish at 0
    beta, sigma = 0.5, 0.2
    params = WeightedHolderParams(beta, sigma)
    path = SampledPath(GEOMETRIC, GEOMETRIC ** (beta - 1))
    w = [weighted_modulus(path, params, t) for t in GEOMETRIC[10:]]
    np.testing.assert_allclose(w, w[-1], rtol=1e-9)
    assert w[-1] > 0
    assert check_weighted_membership(path, params)[2] is False


def test_slightly_smoother_power_belongs():
    beta, sigma, eps = 0.5, 0.2, 0.3
    params = WeightedHolderParams(beta, sigma)
    path = SampledPath(GEOMETRIC, GEOMETRIC ** (beta - 1 + eps))
    w = [weighted_modulus(path, params, t) for t in GEOMETRIC[10:]]
    # modulus scales like t^eps
    np.testing.assert_allclose(np.diff(np.log2(w)), eps, rtol=1e-9)
    assert check_weighted_membership(path, params) == (True, True, True)


def test_plain_holder_norm_oracles():
    sqrt_path = SampledPath.from_function(np.sqrt, UNIFORM)
    assert holder_seminorm(sqrt_path, 0.5) == pytest.approx(1.0)
    assert holder_norm(sqrt_path, 0.5) == pytest.approx(2.0)
    lin = SampledPath(UNIFORM, UNIFORM)
    assert holder_norm(lin, 1.0, (0.5, 1.0)) == pytest.approx(2.0)
    assert holder_seminorm(lin, 0.5) == pytest.approx(1.0)


def test_dual_norm_path():
    fam = OperatorFamily.scalar(4.0)
    path = SampledPath(UNIFORM, UNIFORM, "dual", fam)
    assert holder_seminorm(path, 1.0) == pytest.approx(0.5)


def test_validation():
    with pytest.raises(ParameterError):
        WeightedHolderParams(1.0, 1.0)
    with pytest.raises(ParameterError):
        WeightedHolderParams(1.2, 0.3)
    with pytest.raises(ParameterError):
        WeightedHolderParams(1.0, 0.6, mu=0.8, nu=0.7)
    with pytest.raises(OrderingError):
        SampledPath([0.0, 0.5, 0.2], [1.0, 2.0, 3.0])
    with pytest.raises(ParameterError):
        SampledPath([0.0, 1.0], [1.0, 2.0], "dual")
    with pytest.raises(InsufficientDataError):
        weighted_holder_norm(SampledPath([1.0], [1.0]), WeightedHolderParams(1.0, 0.3))
    with pytest.raises(InsufficientDataError):
        check_weighted_membership(SampledPath(UNIFORM[:5], UNIFORM[:5]), WeightedHolderParams(1.0, 0.3))
    with pytest.raises(ParameterError):
        holder_norm(SampledPath(UNIFORM, UNIFORM), 1.5)


@given(st.lists(st.booleans(), min_size=UNIFORM.size, max_size=UNIFORM.size),
       st.floats(0.55, 1.0), st.floats(0.05, 0.5))
def test_norms_monotone_under_restriction(mask, beta, sigma):
    mask = np.array(mask)
    mask[-1] = mask[0] = True
    rng = np.random.default_rng(7)
    path = SampledPath(UNIFORM, np.cumsum(rng.standard_normal(UNIFORM.size)))
    sub = path.restrict(mask)
    params = WeightedHolderParams(beta, min(sigma, beta * 0.9))
    assert weighted_holder_norm(sub, params).norm <= weighted_holder_norm(path, params).norm + 1e-12
    assert holder_seminorm(sub, sigma) <= holder_seminorm(path, sigma) + 1e-12


@given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_norm_is_homogeneous(c):
    path = SampledPath(UNIFORM, np.sin(3 * UNIFORM))
    scaled = SampledPath(UNIFORM, c * np.sin(3 * UNIFORM))
    params = WeightedHolderParams(0.8, 0.4)
    assert weighted_holder_norm(scaled, params).norm == pytest.approx(abs(c) * weighted_holder_norm(path, params).norm)
