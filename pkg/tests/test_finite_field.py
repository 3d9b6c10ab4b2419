"""Unit tests for finite field arithmetic and discrete logarithms."""
import pytest

from src.core.errors import DomainError
from src.core.finite_field import QuadraticExtension, ResidueField, discrete_log_bsgs, factor_mod_p


class TestFactorization:
    """Test cases for factor_mod_p."""

    def test_split(self):
        factors = factor_mod_p([-2, 0, 1], 7)
        assert len(factors) == 2
        assert all(len(g) == 2 and e == 1 for g, e in factors)

    def test_irreducible(self):
        factors = factor_mod_p([2, 0, 1], 5)
        assert factors == [([1, 0, 2], 1)]


class TestResidueField:
    """Test cases for F_p[Y]/(phi)."""

    @pytest.fixture
    def f25(self):
        return ResidueField(5, [1, 0, 2])

    def test_order(self, f25):
        assert f25.degree == 2
        assert f25.order == 25

    def test_inverse(self, f25):
        y = f25.add(f25.generator(), f25.element(3))
        assert f25.mul(y, f25.inv(y)) == f25.one()
        with pytest.raises(ZeroDivisionError):
            f25.inv(f25.zero())

    def test_norm(self, f25):
        assert f25.norm_to_prime_field(f25.generator()) == 2
        assert f25.norm_to_prime_field(f25.element(3)) == 4

    def test_sqrt(self, f25):
        a = f25.element(3)
        r = f25.sqrt(a)
        assert f25.mul(r, r) == a

    def test_to_int(self, f25):
        assert f25.to_int(f25.element(4)) == 4
        with pytest.raises(DomainError):
            f25.to_int(f25.generator())

    def test_pow_negative(self, f25):
        y = f25.generator()
        assert f25.mul(f25.pow(y, -3), f25.pow(y, 3)) == f25.one()


class TestQuadraticExtension:
    """Test cases for F_q[Z]/(Z^2 - d)."""

    @pytest.fixture
    def f7(self):
        return ResidueField(7, [1, 0])

    def test_sqrt_d(self, f7):
        ext = QuadraticExtension(f7, 3)
        r = ext.sqrt_d()
        assert ext.mul(r, r) == ext.element(3)
        assert ext.norm_to_prime_field(r) == 4

    def test_inverse(self, f7):
        ext = QuadraticExtension(f7, 3)
        x = ext.add(ext.sqrt_d(), ext.element(2))
        assert ext.mul(x, ext.inv(x)) == ext.one()

    def test_square_rejected(self, f7):
        with pytest.raises(DomainError):
            QuadraticExtension(f7, 2)


class TestDiscreteLog:
    """Test cases for baby-step giant-step."""

    def test_small(self):
        assert discrete_log_bsgs(3, 2, 11) == 8

    @pytest.mark.parametrize("p, g", [(101, 2), (1009, 11)])
    def test_roundtrip(self, p, g):
        for x in (0, 1, 17, p - 2):
            h = pow(g, x, p)
            assert pow(g, discrete_log_bsgs(h, g, p), p) == h

    def test_zero(self):
        with pytest.raises(DomainError):
            discrete_log_bsgs(0, 2, 11)
