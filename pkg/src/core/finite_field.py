"""Finite fields F_p[Y]/(phi) and their quadratic extensions, plus discrete logs.

Polynomials follow the sympy galoistools convention: integer lists, highest
degree first, coefficients reduced mod p.
"""
from math import isqrt
from typing import Dict, List, Optional, Sequence, Tuple

from sympy.polys.domains import ZZ
from sympy.polys.galoistools import (
    gf_add,
    gf_factor,
    gf_from_int_poly,
    gf_gcdex,
    gf_mul,
    gf_neg,
    gf_rem,
    gf_strip,
    gf_sub,
)

from src.core.errors import DomainError

Poly = List[int]


def factor_mod_p(coeffs_low_first: Sequence[int], p: int) -> List[Tuple[Poly, int]]:
    """Factor an integer polynomial mod p; factors are monic, highest degree first."""
    f = gf_from_int_poly(list(reversed([int(c) for c in coeffs_low_first])), p)
    _, factors = gf_factor(f, p, ZZ)
    return [(list(g), e) for g, e in factors]


class ResidueField:
    """F_p[Y]/(phi) for an irreducible phi; elements are reduced polynomials."""

    def __init__(self, p: int, phi: Poly):
        self.p = p
        self.phi = gf_strip(list(phi))
        self.degree = len(self.phi) - 1
        self.order = p ** self.degree

    def __repr__(self):
        return f"ResidueField(p={self.p}, degree={self.degree})"

    def element(self, value: int) -> Poly:
        return gf_strip([value % self.p])

    def generator(self) -> Poly:
        """The class of Y."""
        return gf_rem([1, 0], self.phi, self.p, ZZ)

    def zero(self) -> Poly:
        return []

    def one(self) -> Poly:
        return [1]

    def add(self, a: Poly, b: Poly) -> Poly:
        return gf_add(a, b, self.p, ZZ)

    def sub(self, a: Poly, b: Poly) -> Poly:
        return gf_sub(a, b, self.p, ZZ)

    def neg(self, a: Poly) -> Poly:
        return gf_neg(a, self.p, ZZ)

    def mul(self, a: Poly, b: Poly) -> Poly:
        return gf_rem(gf_mul(a, b, self.p, ZZ), self.phi, self.p, ZZ)

    def is_zero(self, a: Poly) -> bool:
        return not gf_strip(a)

    def inv(self, a: Poly) -> Poly:
        if self.is_zero(a):
            raise ZeroDivisionError("inverse of zero in a residue field")
        s, _, h = gf_gcdex(a, self.phi, self.p, ZZ)
        if h != [1]:
            raise DomainError(f"{self.phi} is not irreducible mod {self.p}")
        return s

    def pow(self, a: Poly, n: int) -> Poly:
        if n < 0:
            a, n = self.inv(a), -n
        result = self.one()
        while n:
            if n & 1:
                result = self.mul(result, a)
            a = self.mul(a, a)
            n >>= 1
        return result

    def to_int(self, a: Poly) -> int:
        """Value of an element that lies in the prime field."""
        a = gf_strip(a)
        if len(a) > 1:
            raise DomainError("element is not in the prime field")
        return a[0] if a else 0

    def is_square(self, a: Poly) -> bool:
        return self.is_zero(a) or self.pow(a, (self.order - 1) // 2) == self.one()

    def sqrt(self, a: Poly) -> Poly:
        """Tonelli-Shanks square root."""
        if self.is_zero(a):
            return self.zero()
        if not self.is_square(a):
            raise DomainError("not a square in this residue field")
        q = self.order - 1
        s = 0
        while q % 2 == 0:
            q //= 2
            s += 1
        z = self._non_residue()
        m, c = s, self.pow(z, q)
        t, r = self.pow(a, q), self.pow(a, (q + 1) // 2)
        while t != self.one():
            i, t2 = 0, t
            while t2 != self.one():
                t2 = self.mul(t2, t2)
                i += 1
            b = self.pow(c, 2 ** (m - i - 1))
            m, c = i, self.mul(b, b)
            t, r = self.mul(t, c), self.mul(r, b)
        return r

    def _non_residue(self) -> Poly:
        for k in range(1, self.p):
            cand = self.element(k)
            if not self.is_square(cand):
                return cand
        y = self.generator()
        for k in range(self.p):
            cand = self.add(y, self.element(k))
            if not self.is_square(cand):
                return cand
        raise DomainError("no quadratic non-residue found")

    def norm_to_prime_field(self, a: Poly) -> int:
        return self.to_int(self.pow(a, (self.order - 1) // (self.p - 1)))


class QuadraticExtension:
    """F_q[Z]/(Z^2 - d) over a residue field where d is a non-square."""

    def __init__(self, base: ResidueField, d: int):
        self.base = base
        self.p = base.p
        self.d = base.element(d)
        if base.is_square(self.d):
            raise DomainError(f"{d} is a square in {base}; no quadratic extension needed")
        self.degree = 2 * base.degree
        self.order = base.order ** 2

    def __repr__(self):
        return f"QuadraticExtension({self.base!r})"

    def element(self, value: int):
        return (self.base.element(value), [])

    def embed(self, a: Poly):
        return (a, [])

    def zero(self):
        return ([], [])

    def one(self):
        return ([1], [])

    def sqrt_d(self):
        return ([], [1])

    def add(self, x, y):
        return (self.base.add(x[0], y[0]), self.base.add(x[1], y[1]))

    def sub(self, x, y):
        return (self.base.sub(x[0], y[0]), self.base.sub(x[1], y[1]))

    def neg(self, x):
        return (self.base.neg(x[0]), self.base.neg(x[1]))

    def mul(self, x, y):
        f = self.base
        u = f.add(f.mul(x[0], y[0]), f.mul(self.d, f.mul(x[1], y[1])))
        v = f.add(f.mul(x[0], y[1]), f.mul(x[1], y[0]))
        return (u, v)

    def is_zero(self, x) -> bool:
        return self.base.is_zero(x[0]) and self.base.is_zero(x[1])

    def inv(self, x):
        f = self.base
        den = f.sub(f.mul(x[0], x[0]), f.mul(self.d, f.mul(x[1], x[1])))
        inv_den = f.inv(den)
        return (f.mul(x[0], inv_den), f.neg(f.mul(x[1], inv_den)))

    def pow(self, x, n: int):
        if n < 0:
            x, n = self.inv(x), -n
        result = self.one()
        while n:
            if n & 1:
                result = self.mul(result, x)
            x = self.mul(x, x)
            n >>= 1
        return result

    def to_int(self, x) -> int:
        if not self.base.is_zero(x[1]):
            raise DomainError("element is not in the prime field")
        return self.base.to_int(x[0])

    def norm_to_prime_field(self, x) -> int:
        return self.to_int(self.pow(x, (self.order - 1) // (self.p - 1)))


def discrete_log_bsgs(h: int, g: int, p: int, order: Optional[int] = None) -> int:
    """x with g^x = h mod p by baby-step giant-step."""
    h %= p
    if h == 0:
        raise DomainError("discrete log of zero")
    n = order or (p - 1)
    m = isqrt(n) + 1
    table: Dict[int, int] = {}
    e = 1
    for j in range(m):
        table.setdefault(e, j)
        e = e * g % p
    factor = pow(g, -m, p)
    gamma = h
    for i in range(m + 1):
        if gamma in table:
            return (i * m + table[gamma]) % n
        gamma = gamma * factor % p
    raise DomainError(f"{h} is not a power of {g} mod {p}")
