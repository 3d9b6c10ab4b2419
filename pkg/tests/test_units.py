"""Unit tests for elliptic units and unit vectors."""
from fractions import Fraction

import mpmath as mp
import pytest

from src.core.errors import AuxiliaryPrimeError, DomainError, InputError, RecognitionError
from src.core.lfunc import hecke_Lprime0
from src.core.modfunc import delta_eval
from src.core.qorders import BinQuadForm, Discriminant, characters, class_group, heegner_point
from src.core.recognition import recognize_rational
from src.core.units import (
    MinimalPolynomial,
    _integer_basis,
    _is_power_of,
    cm_point_element,
    content_prime,
    elliptic_unit_conjugates,
    integrality_check,
    lattice_times_order,
    ray_class_norm,
    recognize_minpoly,
    recognize_unit_minpoly,
    siegel_content_readings,
    split_primes,
    stark_log_sum,
    stark_prediction_candidates,
    unit_vector,
    unit_vector_aux,
)


@pytest.fixture(scope="module")
def setup_23():
    disc = Discriminant(-23)
    cg = class_group(disc)
    return disc, cg, characters(cg)[1]


@pytest.fixture(scope="module")
def setup_100():
    disc = Discriminant(-4, 5)
    cg = class_group(disc)
    return disc, cg, characters(cg)[1]


class TestLattices:
    """Test cases for CM points and lattice arithmetic."""

    def test_cm_point(self):
        tau = cm_point_element(BinQuadForm(1, 1, 16), Discriminant(-7, 3))
        assert tau == (Fraction(-1, 2), Fraction(3, 2))

    def test_maximal_order_lattice(self):
        basis = lattice_times_order((Fraction(0), Fraction(1, 2)), 1, -4)
        assert basis == ((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1, 2)))

    def test_integer_basis_is_hermite(self):
        """The off-diagonal entry is reduced into [0, h)."""
        assert _integer_basis([(2, 5), (0, 3)]) == ((2, 2), (0, 3))
        assert _integer_basis([(-4, 1), (2, 0)]) == ((2, 0), (0, 1))

    def test_degenerate_generators(self):
        with pytest.raises(DomainError):
            _integer_basis([(0, 1), (0, 2)])
        with pytest.raises(DomainError):
            _integer_basis([(1, 2), (2, 4)])


class TestEllipticUnits:
    """Test cases for the conjugates of e_c at the CM points."""

    def test_maximal_order_gives_delta_values(self, setup_23):
        disc, cg, _ = setup_23
        conjugates = elliptic_unit_conjugates(disc, 64, cg)
        assert [i for i, _ in conjugates] == list(range(cg.order))
        with mp.workprec(64):
            for i, value in conjugates:
                expected = delta_eval(heegner_point(cg.forms[i]), 64)
                assert abs(value - expected) < mp.mpf(10) ** -15 * abs(expected)
            principal = conjugates[cg.identity][1]
            assert abs(mp.im(principal)) < mp.mpf(10) ** -15 * abs(principal)

    @pytest.mark.slow
    def test_conductor_three_norm_is_rational(self):
        """The product of the conjugates is a nonzero rational, its content a power of 3."""
        disc = Discriminant(-7, 3)
        cg = class_group(disc)
        conjugates = elliptic_unit_conjugates(disc, 256, cg)
        assert len(conjugates) == 4
        with mp.workprec(256):
            norm = mp.fprod(value for _, value in conjugates)
            assert abs(mp.im(norm)) < mp.mpf(10) ** -20 * abs(norm)
            value = recognize_rational(mp.re(norm), 10**12, mp.mpf(10) ** -20)
        assert value != 0
        assert _is_power_of(abs(value), 3)


class TestMinimalPolynomial:
    """Test cases for minimal polynomial recognition."""

    def test_integer_roots(self):
        with mp.workprec(128):
            poly = recognize_minpoly([mp.mpf(2), mp.mpf(3)], 128)
        assert poly.coeffs == [6, -5, 1]
        assert poly.kappa == 1
        assert poly.degree == 2

    def test_content_scaling(self):
        with mp.workprec(128):
            r = mp.sqrt(2) / 3
            poly = recognize_minpoly([r, -r], 128, content_prime=3, max_power=2)
        assert poly.coeffs == [-2, 0, 1]
        assert poly.kappa == 3

    def test_repeated_values_rejected(self):
        with pytest.raises(RecognitionError):
            recognize_minpoly([mp.mpf(2), mp.mpf(2)], 128)

    def test_non_integral_rejected(self):
        with mp.workprec(128):
            with pytest.raises(RecognitionError):
                recognize_minpoly([mp.pi, mp.e], 128)

    def test_invariants(self):
        poly = MinimalPolynomial(coeffs=[1, -3, 1], kappa=Fraction(1), residual=mp.mpf(0))
        assert poly.discriminant() == 5
        assert poly.derivative() == [-3, 2]
        assert poly.unit_content() == (True, 1)
        restored = MinimalPolynomial.from_json(poly.to_json())
        assert restored.coeffs == poly.coeffs

    def test_content(self):
        poly = MinimalPolynomial(coeffs=[-9, 0, 1], kappa=Fraction(1), residual=mp.mpf(0))
        assert poly.unit_content() == (False, 9)
        assert _is_power_of(Fraction(9), 3)
        assert _is_power_of(Fraction(1, 27), 3)
        assert not _is_power_of(Fraction(6), 3)

    def test_content_prime(self):
        assert content_prime(9) == 3
        assert content_prime(6) == 1

    def test_siegel_content_readings(self):
        """Prime c satisfies both readings; prime powers only the second."""
        assert siegel_content_readings(3) == {"prime": 3, "prime power": 3}
        assert siegel_content_readings(9) == {"prime": 1, "prime power": 3}
        assert siegel_content_readings(6) == {"prime": 1, "prime power": 1}

    def test_maximal_order_rejected(self, setup_23):
        disc, cg, _ = setup_23
        with pytest.raises(InputError):
            recognize_unit_minpoly(disc, 64, cg)

    @pytest.mark.slow
    def test_conductor_three(self):
        disc = Discriminant(-7, 3)
        cg = class_group(disc)
        poly, values, prec = recognize_unit_minpoly(disc, 128, cg)
        assert poly.degree == 4
        assert len(values) == 4
        assert prec >= 128
        xi = next(x for x in characters(cg) if not x.is_trivial())
        u = unit_vector(disc, xi, "u_stark", prec, cg, base=values, minpoly=poly)
        report = integrality_check(u)
        assert report["unit"]
        assert report["weights_integral"]


class TestUnitVectors:
    """Test cases for u_xi, u_Stark and u_f."""

    def test_scalar_chain(self, setup_23):
        disc, cg, xi = setup_23
        base = [mp.mpf(1)] * cg.order
        scalars = {which: unit_vector(disc, xi, which, 64, cg, base=base).scalar.as_rational()
                   for which in ("u_xi", "u_stark", "u_f")}
        assert scalars == {"u_xi": 3, "u_stark": Fraction(1, 4), "u_f": Fraction(1, 4)}

    def test_flags_non_unit_base(self, setup_23):
        disc, cg, xi = setup_23
        u = unit_vector(disc, xi, "u_stark", 64, cg, base=[mp.mpf(1)] * cg.order)
        assert u.notes["non_unit_base"]
        report = integrality_check(u)
        assert report["scalar_integral"]
        assert report["unit"] is None

    def test_rejects_trivial_character(self, setup_23):
        disc, cg, _ = setup_23
        with pytest.raises(InputError):
            unit_vector(disc, characters(cg)[0], "u_xi", 64, cg)

    def test_rejects_unknown_kind(self, setup_23):
        disc, cg, xi = setup_23
        with pytest.raises(InputError):
            unit_vector(disc, xi, "u_other", 64, cg)

    def test_split_primes(self, setup_23):
        disc, _, _ = setup_23
        assert split_primes(disc, 3) == [2, 3, 13]

    def test_auxiliary_prime_principal(self, setup_23):
        disc, cg, xi = setup_23
        with pytest.raises(AuxiliaryPrimeError):
            unit_vector_aux(disc, xi, 59, 64, cg, base=[mp.mpf(1)] * cg.order)

    def test_auxiliary_prime_inert(self, setup_23):
        disc, cg, xi = setup_23
        with pytest.raises(InputError):
            unit_vector_aux(disc, xi, 5, 64, cg)

    def test_auxiliary_scalar(self, setup_23):
        disc, cg, xi = setup_23
        u = unit_vector_aux(disc, xi, 2, 64, cg, base=[mp.mpf(k + 2) for k in range(cg.order)])
        assert u.kind == "u_xi_aux"
        assert u.notes["ell"] == 2
        assert not u.scalar.is_rational()


class TestStarkSums:
    """Test cases for the Stark logarithm sums."""

    def test_candidates_maximal(self, setup_23):
        disc, cg, xi = setup_23
        assert stark_prediction_candidates(disc, xi, cg) == {"w_frak_c": Fraction(-1, 12),
                                                             "w_order": Fraction(-1, 12)}

    def test_candidates_conductor_five(self, setup_100):
        disc, cg, xi = setup_100
        assert stark_prediction_candidates(disc, xi, cg) == {"w_frak_c": Fraction(-1, 30),
                                                             "w_order": Fraction(-1, 60)}

    def test_stark_formula_maximal(self, setup_23):
        disc, cg, xi = setup_23
        lprime = hecke_Lprime0(disc, xi, 80, embeddings=[1], cg=cg)[1]
        total = stark_log_sum(disc, xi, 80, cg)
        assert abs(lprime + total / 12) < mp.mpf(10) ** -15

    def test_stark_formula_conductor_five(self, setup_100):
        disc, cg, xi = setup_100
        lprime = hecke_Lprime0(disc, xi, 80, embeddings=[1], cg=cg)[1]
        total = stark_log_sum(disc, xi, 80, cg)
        assert abs(lprime + total / 60) < mp.mpf(10) ** -15

    def test_ray_class_norm(self, setup_100):
        disc, _, _ = setup_100
        rows = ray_class_norm(disc, 96)
        assert len(rows) == 1
        assert rows[0]["full_is_half_squared"]
        with mp.workprec(96):
            assert abs(rows[0]["log_ratio_to_eps"] - 60 * mp.log(5)) < mp.mpf(10) ** -15

    def test_ray_class_norm_needs_conductor(self, setup_23):
        disc, _, _ = setup_23
        with pytest.raises(InputError):
            ray_class_norm(disc)
