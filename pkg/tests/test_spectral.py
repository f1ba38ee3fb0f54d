"""
Test Gegenbauer expansions and positive definiteness classification
"""
import math

import numpy as np
import pytest

from src.analysis.spectral import (
    GegenbauerExpansion,
    classify_pd,
    composite_rule,
    expand_kernel,
    expansion_eval,
    expansion_to_dict,
    gauss_gegenbauer_rule,
    gegenbauer_eval,
    harmonic_dim,
    minimizer_regime,
    sigma_energy,
    support_bound,
    zonal_table,
)
from src.features.kernels import PFrame, PolynomialT, parse_kernel
from src.utils.errors import DomainError, NumericalError


def test_gegenbauer_recurrence():
    """Legendre and Chebyshev values from the recurrence"""
    t = 0.3
    assert gegenbauer_eval(2, 0.5, t) == pytest.approx((3 * t * t - 1) / 2, abs=1e-15)
    assert gegenbauer_eval(3, 0.0, 0.5) == pytest.approx(-1.0, abs=1e-15)
    assert gegenbauer_eval(1, 1.0, t) == pytest.approx(2 * t)


def test_gegenbauer_rejects_bad_argument():
    """t outside [-1, 1] is a DomainError"""
    with pytest.raises(DomainError):
        gegenbauer_eval(2, 0.5, 1.5)


@pytest.mark.parametrize("d", [3, 4, 5])
def test_zonal_at_one_is_harmonic_dim(d):
    """P_n(1) = a_n^d"""
    values = zonal_table(12, d, 1.0)
    for n in range(13):
        assert values[n] == pytest.approx(harmonic_dim(n, d), rel=1e-12)


def test_zonal_d2_is_twice_chebyshev():
    """d = 2 uses P_n = 2 T_n"""
    values = zonal_table(4, 2, 1.0)
    np.testing.assert_allclose(values, [1, 2, 2, 2, 2])


def test_harmonic_dim():
    """Known dimensions and overflow"""
    assert harmonic_dim(2, 3) == 5
    assert harmonic_dim(5, 2) == 2
    assert harmonic_dim(3, 4) == 16
    with pytest.raises(NumericalError):
        harmonic_dim(40, 60)


def test_gauss_gegenbauer_rule_constant_weight():
    """lam = 1/2 integrates against the constant weight"""
    nodes, weights = gauss_gegenbauer_rule(1, 0.5)
    assert nodes[0] == pytest.approx(0.0, abs=1e-15)
    assert weights[0] == pytest.approx(2.0)
    nodes, weights = gauss_gegenbauer_rule(2, 0.5)
    assert float(np.sum(weights * nodes ** 2)) == pytest.approx(2.0 / 3.0)


def test_gauss_gegenbauer_rule_lam_one():
    """lam = 1 integrates against sqrt(1 - t^2)"""
    nodes, weights = gauss_gegenbauer_rule(2, 1.0)
    assert float(np.sum(weights)) == pytest.approx(math.pi / 2)
    assert float(np.sum(weights * nodes ** 2)) == pytest.approx(math.pi / 8)


def test_composite_rule_absorbs_kink():
    """|t|^3 is integrated exactly once the split at zero absorbs the power"""
    nodes, weights = composite_rule(0.5, ((0.0, 3.0),), 8)
    assert math.fsum(np.abs(nodes) ** 3 * weights) == pytest.approx(0.5, abs=1e-13)
    nodes, weights = composite_rule(1.0, ((0.0, 1.0),), 32)
    assert math.fsum(np.abs(nodes) * weights) == pytest.approx(2.0 / 3.0, abs=1e-10)


def test_expand_t_squared_d3():
    """t^2 = (1/3) P_0 + (2/15) P_2 on S^2"""
    exp = expand_kernel(PolynomialT((0.0, 0.0, 1.0)), 3, 4)
    np.testing.assert_allclose(exp.coeffs, [1 / 3, 0, 2 / 15, 0, 0], atol=1e-13)
    assert exp.truncation_error_bound < 1e-12


def test_expand_t_squared_d2():
    """Chebyshev convention on the circle"""
    exp = expand_kernel(PolynomialT((0.0, 0.0, 1.0)), 2, 3)
    np.testing.assert_allclose(exp.coeffs, [0.5, 0, 0.25, 0], atol=1e-13)


def test_expansion_reconstructs_polynomial():
    """Reconstruction error at random points is tiny for polynomials"""
    k = PolynomialT((0.5, -1.0, 0.0, 2.0))
    exp = expand_kernel(k, 4, 5)
    t = np.linspace(-1.0, 1.0, 21)
    np.testing.assert_allclose(expansion_eval(exp, t), k(t), atol=1e-12)


def test_expansion_of_pframe_converges():
    """Truncation bound covers the reconstruction error of |t|^3"""
    exp = expand_kernel(PFrame(3.0), 3, 24)
    t = np.linspace(-1.0, 1.0, 101)
    err = np.max(np.abs(exp.evaluate(t) - np.abs(t) ** 3))
    assert err <= exp.truncation_error_bound + 1e-12
    assert err < 1e-3
    np.testing.assert_allclose(exp.coeffs[1::2], 0.0, atol=1e-13)


def test_expansion_rejects_nonfinite():
    """Non-finite coefficients are a NumericalError"""
    with pytest.raises(NumericalError):
        GegenbauerExpansion(d=3, coeffs=np.array([1.0, np.nan]))


def test_classify_pframe_three():
    """|t|^3 on S^2 has a negative degree-6 coefficient"""
    cls = classify_pd(expand_kernel(PFrame(3.0), 3, 16))
    assert 6 in cls.n_minus
    assert 8 in cls.n_plus
    assert 2 in cls.n_plus
    assert not cls.pd_up_to_constant


def test_classify_positive_definite():
    """t^2 is positive definite up to constants"""
    cls = classify_pd(expand_kernel(PolynomialT((0.0, 0.0, 1.0)), 3, 6))
    assert cls.n_plus == (0, 2)
    assert cls.n_minus == ()
    assert cls.pd_up_to_constant


@pytest.mark.parametrize(
    "literal, regime",
    [("poly:0,-1,-1", "dirac"), ("poly:0,1,-1", "antipodal"), ("poly:0,0,1", "uniform"), ("poly:0,1,0,1", "centrally-symmetric")],
)
def test_minimizer_regime(literal, regime):
    """Coefficient signs select the regime"""
    assert minimizer_regime(expand_kernel(parse_kernel(literal), 3, 6)) == regime


def test_sigma_energy():
    """Energy of the uniform measure"""
    assert sigma_energy(PolynomialT((0.0, 0.0, 1.0)), 3) == pytest.approx(1 / 3, rel=1e-12)
    assert sigma_energy(PFrame(3.0), 3) == pytest.approx(0.25, rel=1e-11)
    assert sigma_energy(PFrame(3.0), 2) == pytest.approx(4 / (3 * math.pi), rel=1e-11)


def test_support_bound():
    """1 plus the harmonic dimensions of the positive degrees"""
    assert support_bound(expand_kernel(PolynomialT((0.0, 0.0, 1.0)), 3, 4)) == 6
    assert support_bound(expand_kernel(PolynomialT((0.0, 1.0, -1.0)), 2, 4)) == 3


def test_expansion_to_dict():
    """Serialized expansion carries the normalization tag"""
    data = expansion_to_dict(expand_kernel(PFrame(1.0), 3, 4))
    assert data["normalization"] == "gegenbauer"
    assert data["lambda"] == 0.5
    assert len(data["coeffs"]) == 5
    assert expansion_to_dict(expand_kernel(PFrame(1.0), 2, 4))["normalization"] == "chebyshev-d2"
