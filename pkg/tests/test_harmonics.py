"""
Test spherical harmonic bases
"""
import numpy as np
import pytest

from src.analysis.spectral import harmonic_dim, zonal_table
from src.features.harmonics import harmonic_basis
from src.features.measures import random_points
from src.utils.errors import DomainError


@pytest.mark.parametrize("d, n", [(2, 1), (2, 4), (3, 1), (3, 2), (3, 5)])
def test_addition_formula(d, n):
    """Orthonormal bases sum to the zonal function: sum_j Y_j(x) Y_j(y) = P_n(<x, y>)"""
    rng = np.random.default_rng(11)
    x = random_points(6, d, rng)
    y = random_points(6, d, rng)
    basis = harmonic_basis(n, d)
    lhs = np.sum(basis.evaluate(x) * basis.evaluate(y), axis=1)
    rhs = zonal_table(n, d, np.sum(x * y, axis=1))[n]
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@pytest.mark.parametrize("d, n", [(4, 1), (4, 3), (5, 2)])
def test_zonal_frame_spans(d, n):
    """Seeded zonal frames have full rank a_n^d"""
    basis = harmonic_basis(n, d, seed=2)
    values = basis.evaluate(random_points(4 * basis.dim, d, np.random.default_rng(0)))
    assert values.shape[1] == harmonic_dim(n, d) == len(basis)
    assert np.linalg.matrix_rank(values) == basis.dim


def test_zonal_frame_is_seeded():
    """Same seed, same nodes"""
    a = harmonic_basis(2, 4, seed=7)
    b = harmonic_basis(2, 4, seed=7)
    np.testing.assert_array_equal(a.nodes, b.nodes)


def test_degree_zero_is_constant():
    """H_0 is spanned by the constant one"""
    values = harmonic_basis(0, 3).evaluate(np.eye(3))
    np.testing.assert_array_equal(values, np.ones((3, 1)))


def test_functions_match_columns():
    """Per-column callables agree with evaluate"""
    basis = harmonic_basis(2, 3)
    pts = np.eye(3)
    table = basis.evaluate(pts)
    for j, g in enumerate(basis.functions):
        np.testing.assert_allclose(g(pts), table[:, j])


def test_basis_errors():
    """Bad degree, dimension or points raise DomainError"""
    with pytest.raises(DomainError):
        harmonic_basis(-1, 3)
    with pytest.raises(DomainError):
        harmonic_basis(1, 1)
    with pytest.raises(DomainError):
        harmonic_basis(1, 3).evaluate(np.eye(2))
