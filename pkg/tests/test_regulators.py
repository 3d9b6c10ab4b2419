"""Unit tests for archimedean and mod-p regulators."""
from fractions import Fraction

import mpmath as mp
import pytest

from src.core.cyclotomic import CyclotomicNumber
from src.core.errors import DomainError, InputError, RamifiedPrimeError
from src.core.qorders import Discriminant, characters, class_group
from src.core.regulators import (
    FpUnitClass,
    reduced_modulus,
    reg_Fp,
    reg_Fp_all_primes,
    reg_R,
    simple_factors,
    stark_Fp_rhs,
)
from src.core.units import MinimalPolynomial, UnitVector, recognize_unit_minpoly, unit_vector


def _vector(base, weights, scalar):
    m = weights[0].m
    return UnitVector(disc=Discriminant(-23), base=base, weights=weights,
                      scalar=CyclotomicNumber.rational(m, scalar), prec=64)


class TestRegR:
    """Test cases for the archimedean regulator."""

    def test_weighted_log_sum(self):
        one = CyclotomicNumber.rational(1, 1)
        u = _vector([mp.e, mp.e ** 2], [one, one], Fraction(2))
        assert abs(reg_R(u) - 6) < mp.mpf(10) ** -15

    def test_character_weights(self):
        weights = [CyclotomicNumber.root_of_unity(3, k) for k in range(3)]
        u = _vector([mp.e, mp.e, mp.e], weights, Fraction(1))
        assert abs(reg_R(u)) < mp.mpf(10) ** -15

    def test_zero_base_value(self):
        one = CyclotomicNumber.rational(1, 1)
        with pytest.raises(DomainError):
            reg_R(_vector([mp.mpf(0)], [one], Fraction(1)))


class TestFpUnitClass:
    """Test cases for classes in F_p^x tensor Z[zeta_m]."""

    @pytest.fixture
    def cls(self):
        return FpUnitClass(p=11, m=3, generator=2, value=CyclotomicNumber(3, [1, 2]), modulus=5)

    def test_reduced_modulus(self):
        assert reduced_modulus(13, 23) == 1
        assert reduced_modulus(11, 23) == 5
        assert reduced_modulus(31, 7) == 5
        assert reduced_modulus(29, 7) == 1

    def test_coordinates(self, cls):
        assert cls.dlog == (1, 2)
        assert cls.reduced == (1, 2)
        assert not cls.is_torsion()

    def test_torsion(self):
        cls = FpUnitClass(p=11, m=3, generator=2, value=CyclotomicNumber(3, [5, 10]), modulus=5)
        assert cls.is_torsion()

    def test_addition(self, cls):
        total = cls + cls
        assert total.value == CyclotomicNumber(3, [2, 4])

    def test_incompatible(self, cls):
        other = FpUnitClass(p=13, m=3, generator=2, value=CyclotomicNumber(3, [1]), modulus=1)
        with pytest.raises(InputError):
            cls + other

    def test_scaling(self, cls):
        assert cls.scaled(Fraction(1, 2)).value == CyclotomicNumber(3, [Fraction(1, 2), 1])
        with pytest.raises(InputError):
            cls.scaled(Fraction(1, 5))

    def test_orbit(self, cls):
        zeta = CyclotomicNumber.root_of_unity(3, 1)
        rotated = FpUnitClass(p=11, m=3, generator=2, value=cls.value * zeta, modulus=5)
        conjugated = FpUnitClass(p=11, m=3, generator=2, value=cls.value.galois(2), modulus=5)
        assert cls.same_orbit(rotated)
        assert cls.same_orbit(conjugated)

    def test_not_in_orbit(self):
        one = FpUnitClass(p=11, m=3, generator=2, value=CyclotomicNumber(3, [1]), modulus=5)
        two = FpUnitClass(p=11, m=3, generator=2, value=CyclotomicNumber(3, [2]), modulus=5)
        assert not one.same_orbit(two)

    def test_as_dict(self, cls):
        data = cls.as_dict()
        assert data["p"] == 11
        assert data["reduced"] == [1, 2]
        assert data["torsion"] is False


class TestRegFp:
    """Test cases for reduction of unit vectors mod p."""

    def test_maximal_order_rejected(self):
        disc = Discriminant(-23)
        cg = class_group(disc)
        u = unit_vector(disc, characters(cg)[1], "u_stark", 64, cg, base=[mp.mpf(1)] * 3)
        with pytest.raises(InputError):
            reg_Fp(u, 5, cg)

    def test_index_divisor_keeps_simple_factors(self):
        """x^3 - 2x^2 + 5 has discriminant -5 * 103 but x - 2 stays a simple factor mod 5."""
        poly = MinimalPolynomial(coeffs=[5, 0, -2, 1], kappa=Fraction(1), residual=mp.mpf(0))
        assert poly.discriminant() % 5 == 0
        assert simple_factors(poly, 5) == [[1, 3]]

    def test_only_repeated_factors(self):
        poly = MinimalPolynomial(coeffs=[5, 0, 1], kappa=Fraction(1), residual=mp.mpf(0))
        with pytest.raises(RamifiedPrimeError):
            simple_factors(poly, 5)

    def test_rhs_needs_stark_vector(self):
        disc = Discriminant(-23)
        cg = class_group(disc)
        u = unit_vector(disc, characters(cg)[1], "u_xi", 64, cg, base=[mp.mpf(1)] * 3)
        with pytest.raises(InputError):
            stark_Fp_rhs(u, 5, cg)

    @pytest.mark.slow
    @pytest.mark.parametrize("p", [5, 11, 13])
    def test_orbit_consistency(self, p):
        disc = Discriminant(-7, 3)
        cg = class_group(disc)
        poly, values, prec = recognize_unit_minpoly(disc, 128, cg)
        xi = next(x for x in characters(cg) if not x.is_trivial())
        u = unit_vector(disc, xi, "u_stark", prec, cg, base=values, minpoly=poly)
        classes = reg_Fp_all_primes(u, p, cg)
        assert len(classes) >= 2
        assert all(classes[0].same_orbit(other) for other in classes[1:])
        rhs = stark_Fp_rhs(u, p, cg)
        assert rhs.p == p
