"""Closed-form covariance C(z, w) and its confluent and sign-resolved variants."""

import numpy as np
import pytest
from scipy.special import gamma

from heavylss.covariance import (FIGURE_C, ModelParams, cov_closed, cov_diag, cov_real_combination,
                                 cov_real_combination_imag, cov_remark_form, k_alpha)
from heavylss.errors import DomainError
from heavylss.kernel import kernel_limit
from heavylss.oracles import cov_r_integral
from heavylss.semicircle import stieltjes, stieltjes_derivative


def _random_pairs(rng, n, min_imag=0.05):
    def pts():
        im = np.exp(rng.uniform(np.log(min_imag), np.log(5), n)) * rng.choice([-1.0, 1.0], n)
        return rng.uniform(-4, 4, n) + 1j * im
    return pts(), pts()


class TestModelParams:
    @pytest.mark.parametrize("alpha", [2.0, 4.0, 1.5, 5.0])
    def test_alpha_range(self, alpha):
        with pytest.raises(DomainError, match=r"\(2, 4\)"):
            ModelParams(alpha)

    def test_c_positive(self):
        with pytest.raises(DomainError):
            ModelParams(3.0, c=0.0)


class TestKAlpha:
    def test_values(self):
        # k_3 = 8 sqrt(pi)/15 = 0.94530872...
        np.testing.assert_allclose(k_alpha(ModelParams(3.0)), 8 * np.sqrt(np.pi) / 15, rtol=1e-15)
        np.testing.assert_allclose(k_alpha(3.0), 0.9453087205, atol=1e-10)
        np.testing.assert_allclose(k_alpha(2.5), 2 * gamma(0.75) / 2.8125, rtol=1e-15)
        np.testing.assert_allclose(k_alpha(2.5), 0.8714074, atol=1e-7)
        np.testing.assert_allclose(k_alpha(2 + 1e-9), 1.0, atol=1e-8)
        assert FIGURE_C == k_alpha(3.0) or abs(FIGURE_C - k_alpha(3.0)) < 1e-15

    def test_positive_and_continuous(self):
        a = np.linspace(2.001, 3.999, 500)
        k = np.array([k_alpha(x) for x in a])
        assert np.all(k > 0)
        k_near = np.array([k_alpha(x + 1e-9) for x in a])
        np.testing.assert_allclose(k_near, k, rtol=1e-5)

    def test_domain(self):
        with pytest.raises(DomainError):
            k_alpha(4.0)


class TestCovClosed:
    params = ModelParams(3.0, 1.0)

    def test_definition(self):
        """Direct transcription of the formula at a generic pair."""
        z, w = 0.4 + 1.1j, -1.3 + 0.6j
        mz, mw = stieltjes(z), stieltjes(w)
        dz, dw = stieltjes_derivative(z), stieltjes_derivative(w)
        a, p = 3.0, 0.5
        ref = (4 * np.pi * mz * dz * mw * dw / (k_alpha(a) * np.sin(np.pi * a / 2))
               * ((-mz**2) ** p - (-mw**2) ** p) / (mz**2 - mw**2))
        np.testing.assert_allclose(cov_closed(z, w, self.params), ref, rtol=1e-13)

    def test_symmetry(self):
        assert cov_closed(2j, 3j, self.params) == cov_closed(3j, 2j, self.params)
        rng = np.random.default_rng(42)
        z, w = _random_pairs(rng, 300)
        np.testing.assert_array_equal(cov_closed(z, w, self.params), cov_closed(w, z, self.params))

    def test_conjugation_and_parity(self):
        rng = np.random.default_rng(5)
        for alpha in (2.2, 3.0, 3.8):
            p = ModelParams(alpha)
            z, w = _random_pairs(rng, 300)
            c = cov_closed(z, w, p)
            np.testing.assert_allclose(cov_closed(np.conj(z), np.conj(w), p), np.conj(c), rtol=1e-13)
            np.testing.assert_allclose(cov_closed(-z, -w, p), c, rtol=1e-13)

    def test_linear_in_c(self):
        rng = np.random.default_rng(6)
        z, w = _random_pairs(rng, 50)
        np.testing.assert_allclose(cov_closed(z, w, ModelParams(2.7, 2.0)),
                                   2 * cov_closed(z, w, ModelParams(2.7, 1.0)), rtol=1e-15)

    def test_conjugate_pair_real_nonnegative(self):
        c = cov_closed(1 + 1j, 1 - 1j, ModelParams(2.5))
        assert abs(c.imag) < 1e-14 * abs(c) and c.real >= 0

    def test_positivity_on_conjugate_pairs(self):
        rng = np.random.default_rng(42)
        for alpha in (2.2, 3.0, 3.8):
            z, _ = _random_pairs(rng, 500, min_imag=0.01)
            c = cov_closed(z, np.conj(z), ModelParams(alpha))
            assert np.min(c.real) >= -1e-12
            assert np.max(np.abs(c.imag) / np.abs(c)) < 1e-12

    def test_continuous_across_confluent_switch(self):
        for z in (2j, 0.5 + 0.2j, -3 - 1j):
            base = cov_diag(z, self.params)
            for eps in (1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 0.0):
                w = z * (1 + eps)
                np.testing.assert_allclose(cov_closed(z, w, self.params), base, rtol=max(10 * eps, 1e-13))

    def test_matches_r_integral_grid(self):
        rng = np.random.default_rng(7)
        for alpha in (2.2, 2.8, 3.0, 3.6):
            p = ModelParams(alpha)
            z, w = _random_pairs(rng, 25, min_imag=0.1)
            for a, b in zip(z, w):
                ref = cov_r_integral(a, b, p)
                assert abs(cov_closed(a, b, p) - ref) / abs(ref) < 1e-8

    def test_sign_against_oracle(self):
        p = ModelParams(3.0)
        ref = cov_r_integral(2j, 3j, p)
        np.testing.assert_allclose(cov_closed(2j, 3j, p), ref, rtol=1e-8)

    def test_domain(self):
        with pytest.raises(DomainError):
            cov_closed(1.0, 2j, self.params)


class TestRemarkForm:
    @pytest.mark.parametrize("alpha", [2.2, 3.0, 3.8])
    def test_equals_closed(self, alpha):
        rng = np.random.default_rng(int(alpha * 10))
        p = ModelParams(alpha)
        z, w = _random_pairs(rng, 200, min_imag=0.01)
        np.testing.assert_allclose(cov_remark_form(z, w, p), cov_closed(z, w, p), rtol=1e-12)

    def test_confluent(self):
        p = ModelParams(3.0)
        np.testing.assert_allclose(cov_remark_form(2j, 2j, p), cov_diag(2j, p), rtol=1e-13)

    def test_conjugation(self):
        p = ModelParams(2.6)
        z, w = 0.3 + 0.8j, -2.4 - 0.2j
        np.testing.assert_allclose(cov_remark_form(np.conj(z), np.conj(w), p),
                                   np.conj(cov_remark_form(z, w, p)), rtol=1e-13)


class TestCovDiag:
    params = ModelParams(3.0)

    def test_limit(self):
        d = cov_diag(2j, self.params)
        assert abs(d - cov_closed(2j, 2j * (1 + 1e-7), self.params)) / abs(d) < 1e-5

    def test_parity(self):
        for z in (2j, 0.4 + 0.7j):
            np.testing.assert_allclose(cov_diag(-z, self.params), cov_diag(z, self.params), rtol=1e-14)

    def test_matches_confluent_quadrature(self):
        for alpha in (2.3, 3.0, 3.7):
            p = ModelParams(alpha)
            for z in (2j, 1 + 0.4j):
                np.testing.assert_allclose(cov_diag(z, p), cov_r_integral(z, z, p), rtol=1e-8)


class TestRealCombination:
    def test_real(self):
        rng = np.random.default_rng(42)
        p = ModelParams(3.0)
        for _ in range(30):
            E, F = rng.uniform(-3, 3, 2)
            e1, e2 = np.exp(rng.uniform(-5, 0, 2))
            assert cov_real_combination_imag(E, F, e1, e2, p) < 1e-10

    def test_parity(self):
        p = ModelParams(2.7)
        np.testing.assert_allclose(cov_real_combination(0.4, -1.1, 0.01, 0.02, p),
                                   cov_real_combination(-0.4, 1.1, 0.01, 0.02, p), rtol=1e-12)

    def test_centre_value(self):
        p = ModelParams(3.0, FIGURE_C)
        assert abs(cov_real_combination(0.0, 0.0, 1e-4, 1e-4, p) - 1 / (2 * np.pi)) < 1e-3
        est, _ = kernel_limit(0.0, 0.0, p)
        assert abs(est - 1 / (2 * np.pi)) < 1e-8

    def test_eta_positive(self):
        with pytest.raises(DomainError):
            cov_real_combination(0.0, 0.0, 0.0, 1e-3, ModelParams(3.0))
