"""Exact arithmetic in cyclotomic fields Q(zeta_m).

Elements are stored in the power basis 1, zeta, ..., zeta^(phi(m)-1) with
``Fraction`` coefficients. Integral elements (the ring Z[zeta_m]) simply have
integer coefficients.
"""
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Tuple

import mpmath as mp
import sympy
from sympy.abc import x as _x


@lru_cache(maxsize=None)
def cyclotomic_coefficients(m: int) -> Tuple[int, ...]:
    """Coefficients of the m-th cyclotomic polynomial, lowest degree first."""
    poly = sympy.Poly(sympy.cyclotomic_poly(m, _x), _x)
    return tuple(int(c) for c in reversed(poly.all_coeffs()))


def _reduce(coeffs: Sequence[Fraction], m: int) -> Tuple[Fraction, ...]:
    phi = cyclotomic_coefficients(m)
    deg = len(phi) - 1
    work = [Fraction(c) for c in coeffs]
    if len(work) < deg:
        work.extend([Fraction(0)] * (deg - len(work)))
    # Phi_m is monic, so plain long division from the top stays exact.
    for top in range(len(work) - 1, deg - 1, -1):
        lead = work[top]
        if lead:
            shift = top - deg
            for k, ck in enumerate(phi):
                work[shift + k] -= lead * ck
    return tuple(work[:deg])


class CyclotomicNumber:
    """An element of Q(zeta_m) in the power basis."""

    __slots__ = ("m", "coeffs")

    def __init__(self, m: int, coeffs: Iterable):
        if m < 1:
            raise ValueError(f"cyclotomic order must be positive, got {m}")
        self.m = m
        self.coeffs = _reduce([Fraction(c) for c in coeffs], m)

    @classmethod
    def zero(cls, m: int) -> "CyclotomicNumber":
        return cls(m, [])

    @classmethod
    def rational(cls, m: int, value) -> "CyclotomicNumber":
        return cls(m, [Fraction(value)])

    @classmethod
    def root_of_unity(cls, m: int, k: int) -> "CyclotomicNumber":
        """Return zeta_m^k."""
        k %= m
        coeffs = [0] * (k + 1)
        coeffs[k] = 1
        return cls(m, coeffs)

    @classmethod
    def from_group_ring(cls, m: int, counts: Sequence[int]) -> "CyclotomicNumber":
        """Return sum_k counts[k] * zeta_m^k for k = 0..m-1."""
        return cls(m, counts)

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def _coerce(self, other) -> "CyclotomicNumber":
        if isinstance(other, CyclotomicNumber):
            if other.m != self.m:
                raise ValueError(f"mixed cyclotomic orders {self.m} and {other.m}")
            return other
        return CyclotomicNumber.rational(self.m, other)

    def __add__(self, other):
        other = self._coerce(other)
        return CyclotomicNumber(self.m, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return CyclotomicNumber(self.m, [-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        prod = [Fraction(0)] * (2 * self.degree)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    if b:
                        prod[i + j] += a * b
        return CyclotomicNumber(self.m, prod)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = CyclotomicNumber.rational(self.m, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        try:
            other = self._coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.m, self.coeffs))

    def __repr__(self):
        return f"CyclotomicNumber(m={self.m}, coeffs={[str(c) for c in self.coeffs]})"

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def is_integral(self) -> bool:
        """True when the element lies in Z[zeta_m]."""
        return all(c.denominator == 1 for c in self.coeffs)

    def as_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self!r} is not rational")
        return self.coeffs[0] if self.coeffs else Fraction(0)

    def conjugate(self) -> "CyclotomicNumber":
        """Complex conjugation zeta_m -> zeta_m^(-1)."""
        counts = [Fraction(0)] * self.m
        for k, c in enumerate(self.coeffs):
            counts[(-k) % self.m] += c
        return CyclotomicNumber(self.m, counts)

    def galois(self, j: int) -> "CyclotomicNumber":
        """Apply zeta_m -> zeta_m^j for j coprime to m."""
        counts = [Fraction(0)] * self.m
        for k, c in enumerate(self.coeffs):
            counts[(j * k) % self.m] += c
        return CyclotomicNumber(self.m, counts)

    def inverse(self) -> "CyclotomicNumber":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in a cyclotomic field")
        if self.is_rational():
            return CyclotomicNumber.rational(self.m, 1 / self.as_rational())
        expr = sum(sympy.Rational(c.numerator, c.denominator) * _x**k for k, c in enumerate(self.coeffs))
        inv = sympy.Poly(sympy.invert(expr, sympy.cyclotomic_poly(self.m, _x)), _x, domain="QQ")
        coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(inv.all_coeffs())]
        return CyclotomicNumber(self.m, coeffs)

    def embed(self, j: int = 1):
        """Numeric value under zeta_m -> exp(2 pi i j / m) at the current mpmath precision."""
        zeta = mp.expjpi(mp.mpf(2 * j) / self.m)
        total = mp.mpc(0)
        power = mp.mpc(1)
        for c in self.coeffs:
            if c:
                total += mp.mpf(c.numerator) / c.denominator * power
            power *= zeta
        return total

    def reduce_mod(self, modulus: int) -> Tuple[int, ...]:
        """Coefficient vector modulo an integer; denominators must be invertible."""
        out = []
        for c in self.coeffs:
            out.append(c.numerator * pow(c.denominator, -1, modulus) % modulus if modulus > 1 else 0)
        return tuple(out)

    def to_json(self) -> list:
        return [str(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, m: int, data: Sequence[str]) -> "CyclotomicNumber":
        return cls(m, [Fraction(c) for c in data])


def embeddings(m: int) -> list:
    """Exponents j with gcd(j, m) = 1, i.e. the embeddings zeta_m -> exp(2 pi i j/m)."""
    return [j for j in range(1, m + 1) if sympy.igcd(j, m) == 1] if m > 1 else [1]
