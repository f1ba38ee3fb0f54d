"""
Test interaction kernels and literal parsing
"""
import numpy as np
import pandas as pd
import pytest

from src.features.kernels import (
    AcuteAngle,
    ArcsinAbs,
    Causal,
    PFrame,
    PolynomialT,
    Tabulated,
    constant_kernel,
    parse_kernel,
)
from src.utils.errors import DomainError


def test_pframe_values_and_derivative():
    """|t|^p and its derivative, zero slope at the kink"""
    k = PFrame(3.0)
    t = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    np.testing.assert_allclose(k(t), np.abs(t) ** 3)
    np.testing.assert_allclose(k.derivative(t), 3.0 * np.sign(t) * t ** 2)
    assert k.derivative(0.0) == 0.0


def test_pframe_rejects_nonpositive_p():
    """p must be positive"""
    with pytest.raises(DomainError):
        PFrame(0.0)


def test_pframe_singularities():
    """Odd p is split at zero, even integer p is smooth"""
    assert PFrame(3.0).singularities == ((0.0, 3.0),)
    assert PFrame(4.0).singularities == ()
    assert PFrame(1.0).kink_at_zero
    assert not PFrame(3.0).kink_at_zero


def test_polynomial_kernel():
    """Coefficients are low to high"""
    k = PolynomialT((1.0, 0.0, -2.0))
    assert k(0.5) == pytest.approx(0.5)
    assert k.derivative(0.5) == pytest.approx(-2.0)
    assert k.degree == 2
    assert k.is_even()
    assert not PolynomialT((0.0, 1.0)).is_even()


def test_causal_kernel_cutoff():
    """The causal kernel vanishes below its cut point"""
    k = Causal(1.5)
    t0 = 1.0 - 2.0 / 1.5 ** 2
    assert k.singularities == ((t0, 0.0),)
    assert k(t0 - 0.1) == 0.0
    assert k(1.0) > 0.0
    assert Causal(0.5).singularities == ()


def test_acute_and_arcsin_add_to_right_angle():
    """arccos|t| + arcsin|t| = pi/2"""
    t = np.linspace(-1.0, 1.0, 11)
    np.testing.assert_allclose(AcuteAngle()(t) + ArcsinAbs()(t), np.pi / 2)
    assert AcuteAngle().is_even()


@pytest.mark.parametrize(
    "literal, cls",
    [("pframe:3", PFrame), ("poly:1,0,-2", PolynomialT), ("causal:1.5", Causal), ("acute", AcuteAngle), ("arcsin", ArcsinAbs)],
)
def test_parse_kernel(literal, cls):
    """Literals parse to the matching kernel and survive a second parse"""
    k = parse_kernel(literal)
    assert isinstance(k, cls)
    assert parse_kernel(k.literal).literal == k.literal


@pytest.mark.parametrize("literal", ["pframe:x", "bogus", "acute:1", "causal:-1"])
def test_parse_kernel_errors(literal):
    """Bad literals raise DomainError"""
    with pytest.raises(DomainError):
        parse_kernel(literal)


def test_table_kernel_from_csv(tmp_path):
    """table: literals load a CSV and interpolate"""
    path = tmp_path / "kernel.csv"
    t = np.linspace(-1.0, 1.0, 41)
    pd.DataFrame({"t": t, "value": t * t}).to_csv(path, index=False, float_format="%.17g")
    k = parse_kernel(f"table:{path}")
    assert isinstance(k, Tabulated)
    assert k(0.3) == pytest.approx(0.09, abs=2e-3)
    linear = parse_kernel(f"table:{path}@1")
    assert linear.order == 1


def test_tabulated_validation():
    """Abscissae must increase and stay in [-1, 1]"""
    with pytest.raises(DomainError):
        Tabulated(np.array([0.0, -0.5, 1.0]), np.zeros(3))
    with pytest.raises(DomainError):
        Tabulated(np.array([-2.0, 0.0, 1.0]), np.zeros(3))


def test_constant_kernel():
    """constant_kernel is a degree zero polynomial"""
    assert constant_kernel(2.0)(0.3) == pytest.approx(2.0)
