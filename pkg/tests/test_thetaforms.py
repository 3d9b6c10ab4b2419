"""Unit tests for theta series of ring class characters."""
import math
from fractions import Fraction
from unittest.mock import patch

import mpmath as mp
import numpy as np
import pytest

from src.core import thetaforms
from src.core.cyclotomic import CyclotomicNumber
from src.core.errors import InputError
from src.core.qorders import Discriminant, characters, class_group
from src.core.thetaforms import (
    QExpansion,
    b_coefficients,
    coset_qexp_numeric,
    default_sampling,
    dual_form,
    eval_form,
    fricke_constant,
    hecke_check,
    theta_qexp,
)


@pytest.fixture(scope="module")
def disc():
    return Discriminant(-23)


@pytest.fixture(scope="module")
def cg(disc):
    return class_group(disc)


@pytest.fixture(scope="module")
def chi(cg):
    return characters(cg)[1]


@pytest.fixture(scope="module")
def theta(disc, chi, cg):
    return theta_qexp(disc, chi, 200, cg)


class TestThetaSeries:
    """Test cases for theta_qexp."""

    def test_first_coefficients(self, theta):
        assert theta.coefficient(1) == 1
        assert theta.coefficient(2) == -1
        assert theta.coefficient(3) == -1
        assert theta.coefficient(5).is_zero()

    def test_level_and_label(self, theta):
        assert theta.level == 23
        assert theta.bound == 200
        assert "-23" in theta.label

    def test_coefficient_range(self, theta):
        with pytest.raises(InputError):
            theta.coefficient(0)
        with pytest.raises(InputError):
            theta.coefficient(201)

    def test_real_coefficients(self, theta):
        assert theta.is_real()
        assert dual_form(theta).coeffs == theta.coeffs

    def test_trivial_character(self, disc, cg):
        f = theta_qexp(disc, characters(cg)[0], 30, cg)
        assert f.coefficient(1) == 1
        assert f.coefficient(2) == 2

    def test_bad_bound(self, disc, chi, cg):
        with pytest.raises(InputError):
            theta_qexp(disc, chi, 0, cg)

    def test_json(self, theta):
        restored = QExpansion.from_json(theta.to_json())
        assert restored.coefficient(47) == theta.coefficient(47)
        assert restored.level == theta.level

    @pytest.mark.parametrize("p", [2, 3, 5, 7, 13])
    def test_hecke_relations(self, theta, disc, chi, cg, p):
        result = hecke_check(theta, disc, chi, p, cg)
        assert result == {"a_p": True, "recursion": True}

    def test_hecke_rejects_level_prime(self, theta, disc, chi, cg):
        with pytest.raises(InputError):
            hecke_check(theta, disc, chi, 23, cg)

    def test_non_maximal_order(self):
        disc = Discriminant(-7, 3)
        cg = class_group(disc)
        for chi in characters(cg):
            f = theta_qexp(disc, chi, 40, cg)
            assert f.coefficient(1) == CyclotomicNumber.rational(chi.m, 1)
            assert f.level == 63


class TestEvaluation:
    """Test cases for numerical evaluation."""

    def test_fricke_constant_is_unimodular(self, theta):
        lam = fricke_constant(theta, prec=64)
        assert abs(abs(lam) - 1) < mp.mpf(10) ** -10

    def test_modularity_under_level_matrix(self, disc, chi, cg):
        theta = theta_qexp(disc, chi, 400, cg)
        with mp.workprec(64):
            z = mp.mpc("0.1", "0.3")
            gamma_z = z / (23 * z + 1)
            lhs = eval_form(theta, gamma_z, prec=64)
            rhs = (23 * z + 1) * eval_form(theta, z, prec=64)
            assert abs(lhs - rhs) < mp.mpf(10) ** -12 * max(1, abs(rhs))

    def test_direct_sum_matches_fricke_path(self, disc, chi, cg):
        """f(z) directly and through f(-1/(N w)) = lambda sqrt(N) w f*(w) agree."""
        theta = theta_qexp(disc, chi, 400, cg)
        with mp.workprec(64):
            z = mp.mpc("0.2", "0.4")
            w = -1 / (23 * z)
            lam = fricke_constant(theta, prec=64)
            direct = eval_form(theta, z, prec=64)
            via_fricke = lam * mp.sqrt(23) * w * eval_form(theta, w, prec=64, conjugate=True)
            assert abs(direct - via_fricke) < mp.mpf(10) ** -12 * max(1, abs(direct))


class TestCosetExpansion:
    """Test cases for coset q-expansions and b-coefficients."""

    @pytest.fixture(scope="class")
    def wide_theta(self, disc, chi, cg):
        return theta_qexp(disc, chi, 400, cg)

    def test_identity_coset(self, wide_theta):
        coeffs = coset_qexp_numeric(wide_theta, (1, 0, 0, 1), 1, 6, 0.5)
        for n in range(1, 7):
            assert abs(coeffs[n] - complex(wide_theta.coefficient(n).embed(1))) < 1e-8

    def test_inversion_coset_at_prime_level(self, wide_theta):
        """f|S(tau) = lambda N^(-1/2) f*(tau/N), so |a_{S,n}| = |a_n| / sqrt(N)."""
        y0 = default_sampling(2)
        coeffs = coset_qexp_numeric(wide_theta, (0, -1, 1, 0), 23, 46, y0)
        for n in range(1, 11):
            expected = abs(complex(wide_theta.coefficient(n).embed(1))) / math.sqrt(23)
            assert abs(abs(coeffs[n]) - expected) < 1e-6

    def test_default_sampling_at_prime_level(self, wide_theta):
        """Default sampling for r <= 8 resolves both cusps of X_0(23)."""
        b = b_coefficients(wide_theta, r_max=8)
        assert abs(b.get(Fraction(1, 23)) - 1) < 1e-6
        assert b.get(1) >= abs(complex(wide_theta.coefficient(1).embed(1))) ** 2

    def test_independent_of_sampling_height(self, wide_theta):
        low = b_coefficients(wide_theta, r_max=2, y0=0.6)
        high = b_coefficients(wide_theta, r_max=2, y0=0.9)
        for r in (Fraction(1, 23), Fraction(5, 23), Fraction(1), Fraction(2)):
            assert abs(low.get(r) - high.get(r)) < 1e-6

    def test_noisy_double_samples_fall_back_to_mpmath(self, wide_theta):
        real_eval = thetaforms.eval_form_numpy

        def noisy(f, zs, embedding=1, conjugate=False):
            values = real_eval(f, zs, embedding, conjugate)
            return values + 1e-9 * np.exp(1j * np.arange(len(values)) ** 2)

        with patch.object(thetaforms, "eval_form_numpy", side_effect=noisy) as mock_eval:
            coeffs = coset_qexp_numeric(wide_theta, (0, -1, 1, 0), 23, 23, 1.0, prec=53)
        mock_eval.assert_called_once()
        for n in range(1, 6):
            expected = abs(complex(wide_theta.coefficient(n).embed(1))) / math.sqrt(23)
            assert abs(abs(coeffs[n]) - expected) < 1e-8
