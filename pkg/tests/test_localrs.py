"""Unit tests for local Rankin-Selberg computations."""
from fractions import Fraction

import sympy

from src.core.localrs import (
    a1,
    a2,
    l_factor,
    local_rs_zeta,
    psi,
    specialisation_check,
    truncated_whittaker_zeta,
    unramified_factor_identity,
    whittaker_closed_form,
    whittaker_new,
    whittaker_zeta,
)


class TestWhittaker:
    """Test cases for the newform Whittaker function."""

    def test_closed_form_agrees(self):
        for n in range(5):
            assert sympy.simplify(whittaker_new(n) - whittaker_closed_form(n)) == 0

    def test_support(self):
        assert whittaker_new(-1) == 0
        assert whittaker_new(0) == 1

    def test_zeta_integral_is_l_factor(self):
        assert whittaker_zeta() == l_factor()

    def test_truncated_series(self):
        x = Fraction(1, 10)
        alpha1, alpha2 = Fraction(1, 2), Fraction(1, 3)
        exact = 1 / ((1 - alpha1 * x) * (1 - alpha2 * x))
        assert abs(truncated_whittaker_zeta(alpha1, alpha2, x, 60) - exact) < Fraction(1, 10 ** 30)


class TestRankinSelberg:
    """Test cases for the unramified local zeta integral."""

    def test_matches_closed_form(self):
        assert local_rs_zeta().matches_closed_form

    def test_normalised_period_is_one(self):
        assert psi() == 1

    def test_dual_specialisation(self):
        result = local_rs_zeta(dual=True)
        assert result.matches_closed_form
        assert result.pairing_at_1 is not None

    def test_factorisation(self):
        assert unramified_factor_identity()

    def test_random_specialisations(self):
        result = specialisation_check(trials=5, n_terms=60)
        assert result["passed"]
        assert result["trials"] == 5

    def test_symbols_are_free(self):
        assert l_factor().as_expr().has(a1)
        assert l_factor().as_expr().has(a2)
