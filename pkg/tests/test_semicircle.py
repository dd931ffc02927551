"""Semicircle Stieltjes transform, its derivative and boundary values."""

import numpy as np
import pytest
from scipy.integrate import quad as scipy_quad

from heavylss.errors import BranchPointError, DomainError
from heavylss.semicircle import (boundary_derivative, boundary_values, m_plus, semicircle_cdf,
                                 semicircle_density, stieltjes, stieltjes_derivative)


def _random_points(rng, n, min_imag=0.0):
    re = rng.uniform(-6, 6, n)
    im = rng.uniform(min_imag, 6, n) * rng.choice([-1.0, 1.0], n)
    return re + 1j * im


class TestStieltjes:
    """Root selection and the fixed-point equation."""

    def test_examples(self):
        np.testing.assert_allclose(stieltjes(1j), 1j * (1 - np.sqrt(5)) / 2, atol=1e-15)
        np.testing.assert_allclose(stieltjes(1j), -0.6180339887j, atol=1e-10)
        np.testing.assert_allclose(stieltjes(3.0), 0.3819660113, atol=1e-10)
        assert abs(stieltjes(100j) - 1 / 100j) < 1e-4

    def test_fixed_point(self):
        rng = np.random.default_rng(42)
        z = _random_points(rng, 1000, min_imag=1e-6)
        m = stieltjes(z)
        assert np.max(np.abs(m + 1 / m - z) / np.abs(z)) < 1e-13

    def test_herglotz_and_conjugation(self):
        rng = np.random.default_rng(1)
        z = np.abs(_random_points(rng, 500).imag) * 1j + rng.uniform(-5, 5, 500)
        m = stieltjes(z)
        assert np.all(m.imag < 0)
        np.testing.assert_allclose(stieltjes(np.conj(z)), np.conj(m), rtol=1e-15)

    def test_modulus_below_one(self):
        rng = np.random.default_rng(2)
        z = _random_points(rng, 500, min_imag=1e-8)
        assert np.all(np.abs(stieltjes(z)) < 1)
        x = np.concatenate([rng.uniform(2.001, 50, 100), -rng.uniform(2.001, 50, 100)])
        assert np.all(np.abs(stieltjes(x)) < 1)

    def test_antisymmetry(self):
        rng = np.random.default_rng(3)
        z = _random_points(rng, 200, min_imag=0.01)
        np.testing.assert_allclose(stieltjes(-z), -stieltjes(z), rtol=1e-14)
        np.testing.assert_allclose(stieltjes_derivative(-z), stieltjes_derivative(z), rtol=1e-13)

    def test_near_cut_precision(self):
        # tiny imaginary parts must not flip the root
        z = np.array([0.5 + 1e-14j, -1.9 + 1e-12j, 0.0 - 1e-15j])
        m = stieltjes(z)
        assert np.all(np.sign(m.imag) == -np.sign(z.imag))

    @pytest.mark.parametrize("z", [0.0, 1.0, -2.0, 2.0, 1.999])
    def test_support_rejected(self, z):
        with pytest.raises(DomainError):
            stieltjes(z)


class TestDerivative:
    def test_examples(self):
        np.testing.assert_allclose(stieltjes_derivative(3.0), -0.1708203932, atol=1e-10)
        np.testing.assert_allclose(stieltjes_derivative(1j), 0.2763932023, atol=1e-10)

    def test_finite_difference(self):
        h = 1e-6
        for z in [3.0, 1j, 0.5 + 0.3j, -2.5 - 0.2j]:
            fd = (stieltjes(z + h) - stieltjes(z - h)) / (2 * h)
            np.testing.assert_allclose(stieltjes_derivative(z), fd, rtol=1e-8)

    def test_algebraic_identity(self):
        rng = np.random.default_rng(42)
        z = _random_points(rng, 100, min_imag=0.1)
        m = stieltjes(z)
        assert np.max(np.abs(stieltjes_derivative(z) - m * m / (m * m - 1))) < 1e-12

    def test_edge_is_singular(self):
        with pytest.raises(DomainError):
            stieltjes_derivative(2.0)


class TestBoundaryValues:
    def test_examples(self):
        bp = boundary_values(0.0)
        np.testing.assert_allclose([bp.m_plus, bp.m_minus], [-1j, 1j], atol=1e-15)
        bp = boundary_values(1.0)
        np.testing.assert_allclose(bp.m_plus, (1 - 1j * np.sqrt(3)) / 2, atol=1e-15)
        np.testing.assert_allclose(bp.m_minus, (1 + 1j * np.sqrt(3)) / 2, atol=1e-15)
        bp = boundary_values(3.0)
        np.testing.assert_allclose([bp.m_plus, bp.m_minus], [0.3819660113] * 2, atol=1e-10)

    def test_pair_invariants(self):
        for E in np.linspace(-1.99, 1.99, 41):
            bp = boundary_values(E)
            assert bp.m_minus == np.conj(bp.m_plus)
            assert abs(abs(bp.m_plus) - 1) < 1e-13
        for E in [2.01, 3.0, -4.5, 10.0]:
            bp = boundary_values(E)
            assert bp.m_plus == bp.m_minus
            assert abs(bp.m_plus) < 1

    def test_limit_from_above_is_monotone(self):
        for E in [-1.5, 0.3, 1.9, 2.5, -3.0]:
            gaps = [abs(stieltjes(E + 1j * eta) - m_plus(E)) for eta in (1e-2, 1e-4, 1e-6)]
            assert gaps[0] > gaps[1] > gaps[2]
            assert gaps[2] < 1e-5

    def test_derivative(self):
        bd = boundary_derivative(3.0)
        np.testing.assert_allclose([bd.m_plus, bd.m_minus], [-0.1708203932] * 2, atol=1e-10)
        np.testing.assert_allclose(boundary_derivative(0.0).m_plus, 0.5, atol=1e-15)
        for E in [2.2, 3.0, 7.0]:
            d = boundary_derivative(E).m_plus
            assert d.imag == 0 and d.real < 0

    def test_derivative_limit(self):
        for E in [0.7, -1.2, 2.6]:
            eta = 1e-7
            np.testing.assert_allclose(stieltjes_derivative(E + 1j * eta),
                                       boundary_derivative(E).m_plus, rtol=1e-5)

    @pytest.mark.parametrize("E", [2.0, -2.0])
    def test_branch_points(self, E):
        with pytest.raises(BranchPointError):
            boundary_values(E)
        with pytest.raises(BranchPointError):
            boundary_derivative(E)


class TestDensity:
    def test_values(self):
        np.testing.assert_allclose(semicircle_density(0.0), 1 / np.pi)
        assert semicircle_density(2.0) == 0
        assert semicircle_density(3.0) == 0

    def test_normalized(self):
        total, _ = scipy_quad(semicircle_density, -2, 2, epsabs=1e-13)
        assert abs(total - 1) < 1e-10

    def test_cdf(self):
        np.testing.assert_allclose(semicircle_cdf([-3.0, 0.0, 3.0]), [0.0, 0.5, 1.0], atol=1e-15)
        val, _ = scipy_quad(semicircle_density, -2, 0.7, epsabs=1e-13)
        np.testing.assert_allclose(semicircle_cdf(0.7), val, atol=1e-12)
