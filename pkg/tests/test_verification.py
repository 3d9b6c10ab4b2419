"""Unit tests for the verification engine."""
from contextlib import ExitStack
from fractions import Fraction
from types import SimpleNamespace
from unittest.mock import patch

import mpmath as mp
import pytest

from src.core.cache import ResultCache
from src.core.errors import InputError, RecognitionError
from src.core.input_validator import VerificationConfig
from src.core.lfunc import CrsResult
from src.core.regulators import reg_R
from src.core.report import CheckRecord
from src.core.verification import ANCHORS, CHECKS, VerificationEngine

CHECK_METHODS = [
    "check_class_group", "check_theta", "check_eisenstein", "check_kronecker",
    "check_siegel_content", "check_stark", "check_stark_regulator", "check_auxiliary_prime",
    "check_scalar_chain", "check_cm_counts", "check_petersson", "check_rs_constant",
    "check_optimal", "check_integrality", "check_regulators", "check_local",
]


@pytest.fixture
def config(tmp_path):
    """A small, fast configuration for d = -23."""
    return VerificationConfig(d=-23, prec=64, coeffs=60, primes=[5], skip_petersson=True,
                              cache_dir=str(tmp_path / "cache"))


@pytest.fixture
def engine(config):
    """Create an engine instance for testing."""
    return VerificationEngine(config)


class TestVerificationEngine:
    """Test cases for VerificationEngine class."""

    def test_check_table(self):
        """Every check has a unique id and a descriptive anchor."""
        ids = [check_id for check_id, _, _ in CHECKS]
        assert len(ids) == len(set(ids)) == 16
        assert ANCHORS["stark-unit"] == "stark-unit-formula"

    def test_initialization(self, engine):
        """Test engine initialization."""
        assert engine.cg.order == 3
        assert engine.chi.m == 3
        assert engine.xi.m == 3
        assert len(engine.nontrivial_characters()) == 2

    def test_character_out_of_range(self, config):
        """Test that an out-of-range character index is refused."""
        config.char_index = 7
        with pytest.raises(InputError):
            VerificationEngine(config)

    def test_theta_is_cached(self, config):
        """The q-expansion is computed once per cache directory."""
        first = VerificationEngine(config).theta()
        second_engine = VerificationEngine(config)
        second = second_engine.theta()
        assert second_engine.cache.hits == 1
        assert second.coefficient(2) == first.coefficient(2)

    def test_class_group_check(self, engine):
        record = engine.check_class_group()
        assert record.status == "pass"
        assert record.details["characters"] == 3

    def test_theta_check(self, engine):
        assert engine.check_theta().status == "pass"

    def test_scalar_chain_check(self, engine):
        record = engine.check_scalar_chain()
        assert record.status == "pass"
        assert record.rhs["value"] == "1"

    def test_cm_counts_check(self, engine):
        assert engine.check_cm_counts().status == "pass"

    def test_siegel_content_skipped_for_maximal_order(self, engine):
        record = engine.check_siegel_content()
        assert record.status == "pass"
        assert "skipped" in record.details

    def test_integrality_flags_non_unit_base(self, engine):
        record = engine.check_integrality()
        assert record.status == "pass"
        assert record.details["flagged_non_unit"] is True

    def test_stark_check(self, engine):
        """L'(xi, 0) = -(1/12) sum xi log||Delta|| at every nontrivial character."""
        record = engine.check_stark()
        assert record.status == "pass"
        assert len(record.details["characters"]) == 2

    def test_regulator_ratio(self, engine):
        """Reg_R(u_xi) / (-6 m L'(xi, 0)) is recognised as 2."""
        record = engine.check_stark_regulator()
        assert record.status == "pass"
        assert record.constants["regulator_ratio"] == "2"
        assert record.constants["expected_ratio"] == "2"
        assert record.details["w_order"] == 2

    def test_regulator_ratio_off_by_two_fails(self, engine):
        """Only the ratio derived from the Stark weighting passes, not its neighbours."""
        with patch("src.core.verification.reg_R", side_effect=lambda u: reg_R(u) / 2):
            record = engine.check_stark_regulator()
        assert record.status == "fail"
        assert record.constants["regulator_ratio"] == "1"
        assert record.constants["expected_ratio"] == "2"

    def test_auxiliary_prime(self, engine):
        record = engine.check_auxiliary_prime()
        assert record.status == "pass"
        assert record.constants["action_convention"] == "l"
        assert record.details["primes"] == [2, 3]

    def test_unresolved_on_domain_errors(self, engine):
        """StarkCheckError inside a check gives an unresolved record."""
        record = engine._run_check("regulator-mod-p", engine.check_regulators)
        assert record.status == "unresolved"
        assert "c > 1" in record.error

        record = engine._run_check("petersson", engine.check_petersson)
        assert record.status == "unresolved"
        assert "skipped" in record.error

    def test_fail_on_unexpected_errors(self, engine):
        """Any other exception gives a failing record."""
        with patch.object(engine, "check_optimal", side_effect=ValueError("boom")):
            record = engine._run_check("optimal-period", engine.check_optimal)
        assert record.status == "fail"
        assert record.error == "ValueError: boom"
        assert record.anchor == ANCHORS["optimal-period"]

    def test_run_all_collects_every_check(self, engine):
        """run_all records every check in order and keeps going after errors."""

        def fake(check_id):
            return lambda: CheckRecord(check_id=check_id, anchor=ANCHORS[check_id], status="pass",
                                       constants={"value": 1})

        with ExitStack() as stack:
            for method, (check_id, _, _) in zip(CHECK_METHODS, CHECKS):
                stack.enter_context(patch.object(engine, method, side_effect=fake(check_id)))
            stack.enter_context(patch.object(engine, "check_rs_constant",
                                             side_effect=RecognitionError("no rational")))
            report = engine.run_all()

        assert [c.check_id for c in report.checks] == [check_id for check_id, _, _ in CHECKS]
        assert report.by_id("rs-constant").status == "unresolved"
        assert report.constants["stark-unit.value"] == 1
        assert report.exit_code() == 0
        assert report.config["d"] == -23

    @pytest.mark.slow
    def test_analytic_checks(self, engine):
        assert engine.check_eisenstein().status == "pass"
        kronecker = engine.check_kronecker()
        assert kronecker.status == "pass"
        assert kronecker.constants["delta_norm_exponent"] == 6
        assert engine.check_local().status == "pass"


@pytest.fixture
def engine_63(tmp_path):
    """Engine for the order of conductor 3 in Q(sqrt -7)."""
    config = VerificationConfig(d=-7, c=3, prec=64, coeffs=60, primes=[5], skip_petersson=True,
                                cache_dir=str(tmp_path / "cache"))
    return VerificationEngine(config)


class TestMeasuredConstants:
    """Checks that compare a measured constant against the value derived for the order."""

    def test_siegel_content_is_measured(self, engine_63):
        """A norm ratio of 3^36 reads as m(3) = 3 under both readings."""
        with patch("src.core.verification.siegel_norm_ratio", return_value=mp.mpf(3) ** 36):
            record = engine_63.check_siegel_content()
        assert record.status == "pass"
        assert record.constants["m_c"] == "3"
        assert record.constants["m_c_reading"] == "prime / prime power"

    def test_siegel_content_without_reading(self, engine_63):
        with patch("src.core.verification.siegel_norm_ratio", return_value=mp.mpf(2) ** 36):
            record = engine_63.check_siegel_content()
        assert record.status == "unresolved"
        assert record.constants["m_c"] == "2"
        assert record.constants["m_c_reading"] is None

    def _rs_record(self, engine, result):
        petersson = (SimpleNamespace(value=1.0), None, SimpleNamespace(norm=1.0))
        adjoint = SimpleNamespace(bernoulli_ratio=Fraction(-2))
        with patch.object(engine, "_petersson_values", return_value=petersson), \
                patch.object(engine, "_adjoint_data", return_value=adjoint), \
                patch.object(engine, "theta", return_value=None), \
                patch("src.core.verification.crs_compute", return_value=result):
            return engine.check_rs_constant()

    def test_rs_constant_matches_local_prediction(self, engine):
        result = CrsResult(measured=mp.mpf("0.5"), recognized=Fraction(1, 2), unramified={2: True, 3: True},
                           predicted=mp.mpf("0.500001"))
        record = self._rs_record(engine, result)
        assert record.status == "pass"
        assert record.details["local_prediction_agrees"] is True

    def test_rs_constant_prediction_mismatch_fails(self, engine):
        result = CrsResult(measured=mp.mpf("0.5"), recognized=Fraction(1, 2), unramified={2: True, 3: True},
                           predicted=mp.mpf("0.25"))
        record = self._rs_record(engine, result)
        assert record.status == "fail"
        assert record.details["local_prediction_agrees"] is False

    def test_rs_constant_without_prediction(self, engine):
        result = CrsResult(measured=mp.mpf("0.5"), recognized=Fraction(1, 2), unramified={2: True},
                           error="not enough b-coefficients at p=23")
        record = self._rs_record(engine, result)
        assert record.status == "unresolved"

    def _optimal_record(self, engine, elliptic_unit):
        closed = {"elliptic_unit": elliptic_unit, "norm_delta": mp.mpf(1)}
        adjoint = SimpleNamespace(value=lambda embedding=None: mp.mpf(3))
        with patch("src.core.verification.optimal_rs_closed_form", return_value=closed), \
                patch.object(engine, "_adjoint_data", return_value=adjoint):
            return engine.check_optimal()

    def test_optimal_ratio_is_index_times_units_over_two(self, engine):
        record = self._optimal_record(engine, mp.mpf(3))
        assert record.status == "pass"
        assert record.constants["optimal_ratio"] == "1"
        assert record.constants["expected_ratio"] == "1"

    def test_optimal_ratio_other_rational_fails(self, engine):
        record = self._optimal_record(engine, mp.mpf(-3))
        assert record.status == "fail"
        assert record.constants["optimal_ratio"] == "-1"

    def test_optimal_ratio_unrecognised(self, engine):
        assert self._optimal_record(engine, mp.pi).status == "unresolved"
