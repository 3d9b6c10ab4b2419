"""Recognise floating values as exact rationals."""
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import mpmath as mp

from src.core.errors import RecognitionError


def round_to_integer(x, tol) -> int:
    """Nearest integer to a real ``x``, failing when the residual exceeds ``tol``."""
    n = int(mp.nint(mp.re(x)))
    residual = abs(x - n)
    if residual > tol:
        raise RecognitionError(f"value {mp.nstr(x, 15)} is not within {mp.nstr(tol, 3)} of an integer")
    return n


def _convergents(x: Fraction) -> Iterator[Fraction]:
    h0, h1, k0, k1 = 0, 1, 1, 0
    while True:
        a = x.numerator // x.denominator
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        yield Fraction(h1, k1)
        frac = x - a
        if frac == 0:
            return
        x = 1 / frac


def recognize_rational(x, height: int = 10**6, tol=None) -> Fraction:
    """Recognise a real number as p/q with q <= height.

    The candidate is the first continued-fraction convergent that reproduces
    ``x`` to ``tol`` (default 2^(-prec/2), relative), so noisy values resolve
    to the simplest rational they are consistent with.
    """
    x = mp.mpf(mp.re(x))
    if tol is None:
        tol = mp.mpf(2) ** (-mp.mp.prec // 2)
    if abs(x) < tol:
        return Fraction(0)
    sign, man, exp, _ = x._mpf_
    exact = (-1) ** sign * Fraction(int(man)) * Fraction(2) ** int(exp)
    for candidate in _convergents(exact):
        if candidate.denominator > height:
            break
        if abs(x - mp.mpf(candidate.numerator) / candidate.denominator) <= tol * max(1, abs(x)):
            return candidate
    raise RecognitionError(f"no rational of height <= {height} matches {mp.nstr(x, 20)}")


def recognize_stable_rational(values: Sequence, height: int = 10**6, tol=None) -> Fraction:
    """Recognise every value and require them all to give the same rational."""
    found = {recognize_rational(v, height, tol) for v in values}
    if len(found) != 1:
        raise RecognitionError(f"unstable rational recognition: {sorted(found)}")
    return found.pop()


def try_recognize_rational(x, height: int = 10**6, tol=None) -> Optional[Fraction]:
    try:
        return recognize_rational(x, height, tol)
    except RecognitionError:
        return None
