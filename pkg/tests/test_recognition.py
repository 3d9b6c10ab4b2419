"""Unit tests for exact recognition of numeric values."""
from fractions import Fraction

import mpmath as mp
import pytest

from src.core.errors import RecognitionError
from src.core.recognition import (
    recognize_rational,
    recognize_stable_rational,
    round_to_integer,
    try_recognize_rational,
)


@pytest.fixture(autouse=True)
def precision():
    with mp.workprec(128):
        yield


class TestRecognition:
    """Test cases for rational recognition."""

    def test_round_to_integer(self):
        assert round_to_integer(mp.mpf("2.0000001"), mp.mpf("1e-3")) == 2
        with pytest.raises(RecognitionError):
            round_to_integer(mp.mpf("2.0000001"), mp.mpf("1e-12"))

    def test_rational(self):
        assert recognize_rational(mp.mpf(-7) / 12) == Fraction(-7, 12)
        assert recognize_rational(mp.mpf(0)) == 0

    def test_negative_rationals(self):
        """Negative targets keep their sign through the continued fraction."""
        assert recognize_rational(mp.mpf(-3) / 2) == Fraction(-3, 2)
        assert recognize_rational(mp.mpf(-1) / 60, height=100) == Fraction(-1, 60)
        assert recognize_rational(mp.mpf(-2)) == -2
        assert try_recognize_rational(-mp.mpf(5) / 7) == Fraction(-5, 7)

    def test_noisy_value_gives_simplest_rational(self):
        """A value known to 1e-5 resolves to the simplest consistent rational, not a large-height one."""
        noisy = mp.mpf(3) / 8 + mp.mpf("2e-6")
        assert recognize_rational(noisy, height=10**4, tol=mp.mpf("1e-5")) == Fraction(3, 8)

    def test_irrational_rejected(self):
        with pytest.raises(RecognitionError):
            recognize_rational(mp.pi, height=1000)
        assert try_recognize_rational(mp.pi, height=1000) is None

    def test_stable_rational(self):
        third = mp.mpf(1) / 3
        assert recognize_stable_rational([third, third + mp.mpf(10) ** -35]) == Fraction(1, 3)
        with pytest.raises(RecognitionError):
            recognize_stable_rational([third, mp.mpf(1) / 2])
