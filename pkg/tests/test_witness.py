"""
Test the non-positive-definiteness witness for |t|^p
"""
import math

import numpy as np
import pytest

from src.analysis.witness import (
    bp_coefficient,
    bp_scale,
    build_witness_points,
    cross_term,
    first_block_direct,
    first_block_value,
    hadamard_power_bound,
    is_even_integer,
    non_pd_witness,
    orthogonal_support_pairs,
    vandermonde_kernel_vector,
    witness_k,
    witness_scan,
    witness_size_ok,
)
from src.features.measures import builtin_config
from src.utils.errors import DomainError, NumericalError


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_vandermonde_vector_annihilates_low_moments(k):
    """sum_j v_j j^m = 0 for m < 2k"""
    v = vandermonde_kernel_vector(k)
    j = np.arange(2 * k + 1, dtype=float)
    scale = np.sum(np.abs(v) * j ** (2 * k))
    for m in range(2 * k):
        assert abs(math.fsum(v * j ** m)) <= 1e-12 * scale


def test_vandermonde_vector_overflow():
    """k beyond the factorial range is a NumericalError"""
    with pytest.raises(NumericalError):
        vandermonde_kernel_vector(86)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_bp_roots_are_the_small_even_integers(k):
    """On a quarter-step grid over (0, 2k], b_p vanishes exactly at p = 2, ..., 2k - 2"""
    grid = np.arange(1, 8 * k + 1) / 4.0
    roots = [float(p) for p in grid if abs(bp_coefficient(k, p)) <= 1e-9 * bp_scale(k, p)]
    assert roots == [float(p) for p in range(2, 2 * k - 1, 2)]


@pytest.mark.parametrize("p, k", [(0.5, 1), (1.0, 1), (2.5, 2), (3.0, 2), (4.5, 3)])
def test_witness_k(p, k):
    """k = ceil(p / 2)"""
    assert witness_k(p) == k


def test_is_even_integer():
    """Even integers are detected with a small tolerance"""
    assert is_even_integer(4.0)
    assert is_even_integer(2.0 + 1e-12)
    assert not is_even_integer(3.0)


def test_build_witness_points():
    """Points lie on the great circle through z and y, y last"""
    z, y = np.eye(3)[0], np.eye(3)[1]
    pts = build_witness_points(z, y, 2, 0.01)
    assert pts.shape == (6, 3)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0)
    np.testing.assert_allclose(pts[2], z)
    np.testing.assert_allclose(pts[-1], y)


def test_build_witness_points_errors():
    """z and y must be orthonormal and eps small"""
    z = np.eye(3)[0]
    with pytest.raises(DomainError):
        build_witness_points(z, np.array([0.6, 0.8, 0.0]), 1, 0.01)
    with pytest.raises(DomainError):
        build_witness_points(z, np.eye(3)[1], 2, 1.0)


def test_first_block_series_matches_direct_for_k1():
    """The series agrees with direct summation where the latter is accurate"""
    for p in (0.5, 1.0, 1.7):
        series = first_block_value(1, p, 0.1)
        direct = first_block_direct(1, p, 0.1)
        assert series == pytest.approx(direct, rel=1e-8)


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("offset", [0.5, 1.0, 1.5])
def test_first_block_flatness(k, offset):
    """Halving eps divides the first block by at least 2^(4k - 1)"""
    p = 2 * k - offset
    eps = 0.02 / k
    ratio = abs(first_block_value(k, p, eps)) / abs(first_block_value(k, p, eps / 2))
    assert ratio >= 2.0 ** (4 * k - 1)


def test_first_block_is_higher_order():
    """The first block scales like eps^(4k), the cross term like eps^p"""
    a1, a2 = first_block_value(2, 3.0, 0.02), first_block_value(2, 3.0, 0.01)
    assert a1 / a2 == pytest.approx(2.0 ** 8, rel=1e-2)
    c1, c2 = cross_term(2, 3.0, 0.02), cross_term(2, 3.0, 0.01)
    assert c1 / c2 == pytest.approx(2.0 ** 3, rel=1e-2)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("p", [0.5, 1.0, 1.5, 3.0, 5.0, 6.5])
def test_non_pd_witness(p, d):
    """The reported form is negative and the direct check agrees"""
    report = non_pd_witness(p, d)
    assert report.quadratic_form_value < -1e-12
    assert report.direct_within_bound
    assert report.points.shape == (2 * report.k + 2, d)
    assert abs(report.direct_value - report.quadratic_form_value) <= report.direct_rounding_bound + 1e-12
    assert report.points.shape[0] >= report.hadamard_bound


@pytest.mark.parametrize("p", [2.0, 4.0, 6.0])
def test_non_pd_witness_even_p(p):
    """Even integers are positive definite"""
    with pytest.raises(DomainError, match="even integer"):
        non_pd_witness(p, 3)


@pytest.mark.parametrize("p", [2.0, 4.0])
def test_even_power_gram_is_psd(p):
    """|t|^p on witness points is positive semidefinite for even p"""
    k = witness_k(p)
    pts = build_witness_points(np.eye(3)[0], np.eye(3)[1], k, 0.01 / k)
    gram = np.abs(np.clip(pts @ pts.T, -1.0, 1.0)) ** p
    assert np.linalg.eigvalsh(gram)[0] >= -1e-10


def test_witness_direct_value_k1():
    """For k = 1 the direct quadratic form matches tightly"""
    report = non_pd_witness(1.0, 3)
    points = report.points
    gram = np.abs(points @ points.T) ** 1.0
    assert float(report.u @ gram @ report.u) == pytest.approx(report.quadratic_form_value, abs=1e-9)


def test_hadamard_power_bound():
    """ceil(2 + p/2)"""
    assert hadamard_power_bound(3.0) == 4
    assert hadamard_power_bound(1.0) == 3
    assert hadamard_power_bound(0.1) == 3
    assert all(witness_size_ok(p) for p in (0.5, 1.0, 2.5, 3.0, 7.3))


def test_witness_scan():
    """Scan statuses over a grid of p"""
    frame = witness_scan(0.5, 2.5, 0.5, 3)
    assert list(frame["p"]) == [0.5, 1.0, 1.5, 2.0, 2.5]
    assert list(frame["status"]) == ["ok", "ok", "ok", "even", "ok"]
    assert (frame.loc[frame["status"] == "ok", "form_value"] < 0).all()


def test_orthogonal_support_pairs():
    """Every pair of basis vectors yields a negative witness"""
    pairs = orthogonal_support_pairs(builtin_config("onb", 3), 3.0)
    assert [(p["i"], p["j"]) for p in pairs] == [(0, 1), (0, 2), (1, 2)]
    assert all(p["form_value"] < 0 for p in pairs)
