"""Imaginary quadratic orders, form class groups and ring class characters."""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd, isqrt, sqrt
from typing import Dict, List, Optional, Tuple

import mpmath as mp
import sympy
from sympy import factorint, jacobi_symbol, sqrt_mod
from sympy.core.intfunc import igcdex

from config.logging_config import log
from src.core.cyclotomic import CyclotomicNumber
from src.core.errors import DomainError, InputError


def is_fundamental(d: int) -> bool:
    """True for negative fundamental discriminants."""
    if d >= 0:
        return False
    if d % 4 == 1:
        return all(e == 1 for e in factorint(-d).values())
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and all(e == 1 for e in factorint(-m).values())
    return False


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n) for a discriminant d."""
    if n == 0:
        return 1 if abs(d) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if d < 0:
            result = -result
    while n % 2 == 0:
        n //= 2
        if d % 2 == 0:
            return 0
        if d % 8 in (3, 5):
            result = -result
    if n == 1:
        return result
    return result * jacobi_symbol(d % n, n)


def mobius(n: int) -> int:
    return int(sympy.mobius(n))


@dataclass(frozen=True)
class Discriminant:
    """Order discriminant D = d c^2 with d fundamental and negative."""

    d: int
    c: int = 1

    def __post_init__(self):
        if self.d >= 0:
            raise InputError(f"discriminant must be negative, got {self.d}")
        if not is_fundamental(self.d):
            raise InputError(f"{self.d} is not a fundamental discriminant")
        if self.c < 1:
            raise InputError(f"conductor must be positive, got {self.c}")

    @property
    def D(self) -> int:
        return self.d * self.c * self.c

    @property
    def level(self) -> int:
        return abs(self.D)

    def with_conductor(self, c: int) -> "Discriminant":
        return Discriminant(self.d, c)

    def __str__(self):
        return f"d={self.d}, c={self.c}"


@dataclass(frozen=True, order=True)
class BinQuadForm:
    """Positive definite binary quadratic form a x^2 + b x y + cc y^2."""

    a: int
    b: int
    cc: int

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.cc

    def is_reduced(self) -> bool:
        a, b, cc = self.a, self.b, self.cc
        if not (abs(b) <= a <= cc):
            return False
        if (abs(b) == a or a == cc) and b < 0:
            return False
        return True

    def normalized(self) -> "BinQuadForm":
        a, b, cc = self.a, self.b, self.cc
        if -a < b <= a:
            return self
        r = (a - b) // (2 * a)
        return BinQuadForm(a, b + 2 * r * a, a * r * r + b * r + cc)

    def reduced(self) -> "BinQuadForm":
        a, b, cc = self.normalized().as_tuple()
        while a > cc or (a == cc and b < 0):
            s = (cc + b) // (2 * cc)
            a, b, cc = cc, -b + 2 * s * cc, cc * s * s - b * s + a
        return BinQuadForm(a, b, cc).normalized()

    def inverse(self) -> "BinQuadForm":
        return BinQuadForm(self.a, -self.b, self.cc).reduced()

    def compose(self, other: "BinQuadForm") -> "BinQuadForm":
        """Gaussian composition of primitive forms of equal discriminant."""
        f1, f2 = self, other
        if f1.a > f2.a:
            f1, f2 = f2, f1
        a1, b1, _ = f1.as_tuple()
        a2, b2, c2 = f2.as_tuple()
        s = (b1 + b2) // 2
        n = b2 - s
        if a2 % a1 == 0:
            y1, d = 0, a1
        else:
            u, _, d = igcdex(a2, a1)
            y1 = u
        if s % d == 0:
            y2, x2, d1 = -1, 0, d
        else:
            u, v, d1 = igcdex(s, d)
            x2, y2 = u, -v
        v1, v2 = a1 // d1, a2 // d1
        r = (y1 * y2 * n - x2 * c2) % v1
        b3 = b2 + 2 * v2 * r
        a3 = v1 * v2
        c3 = (b3 * b3 - self.discriminant) // (4 * a3)
        return BinQuadForm(a3, b3, c3).reduced()

    def evaluate(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.cc * y * y

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.a, self.b, self.cc)

    def __str__(self):
        return f"({self.a},{self.b},{self.cc})"


def reduced_forms(D: int) -> List[BinQuadForm]:
    """All primitive reduced forms of discriminant D < 0."""
    if D >= 0 or D % 4 not in (0, 1):
        raise InputError(f"invalid form discriminant {D}")
    forms = []
    a_max = isqrt(-D // 3)
    for a in range(1, a_max + 1):
        for b in range(-a + 1, a + 1):
            if (b - D) % 2:
                continue
            num = b * b - D
            if num % (4 * a):
                continue
            cc = num // (4 * a)
            if cc < a:
                continue
            if b < 0 and a == cc:
                continue
            if gcd(gcd(a, abs(b)), cc) != 1:
                continue
            forms.append(BinQuadForm(a, b, cc))
    return forms


def representation_counts(Q: BinQuadForm, q_max: int) -> Dict[int, int]:
    """#{v != 0 : Q(v) = n} for 1 <= n <= q_max."""
    a, b, cc = Q.as_tuple()
    D = -Q.discriminant
    counts: Dict[int, int] = {}
    y_max = isqrt(4 * a * q_max // D) + 1
    for y in range(-y_max, y_max + 1):
        rest = q_max - D * y * y / (4 * a)
        if rest < 0:
            continue
        centre = -b * y / (2 * a)
        half = sqrt(rest / a)
        for x in range(int(centre - half) - 1, int(centre + half) + 2):
            n = a * x * x + b * x * y + cc * y * y
            if 0 < n <= q_max:
                counts[n] = counts.get(n, 0) + 1
    return counts


def principal_form(D: int) -> BinQuadForm:
    b = D % 2
    return BinQuadForm(1, b, (b * b - D) // 4)


def prime_form(D: int, p: int) -> BinQuadForm:
    """Reduced form of a prime ideal of norm p in the order of discriminant D."""
    if kronecker(D, p) == -1:
        raise DomainError(f"{p} is inert for discriminant {D}")
    for b in sorted(sqrt_mod(D % (4 * p), 4 * p, all_roots=True) or []):
        if (b - D) % 2 == 0:
            return BinQuadForm(p, b, (b * b - D) // (4 * p)).reduced()
    raise DomainError(f"no prime form of norm {p} for discriminant {D}")


@dataclass
class ClassGroup:
    """Form class group Pic(O_c) with an exhaustive composition table."""

    disc: Discriminant
    forms: List[BinQuadForm]
    table: List[List[int]]
    identity: int

    @cached_property
    def index(self) -> Dict[BinQuadForm, int]:
        return {f: i for i, f in enumerate(self.forms)}

    @property
    def order(self) -> int:
        return len(self.forms)

    def compose(self, i: int, j: int) -> int:
        return self.table[i][j]

    def inverse(self, i: int) -> int:
        return self.index[self.forms[i].inverse()]

    def power(self, i: int, k: int) -> int:
        if k < 0:
            i, k = self.inverse(i), -k
        result = self.identity
        for _ in range(k):
            result = self.table[result][i]
        return result

    def element_order(self, i: int) -> int:
        k, cur = 1, i
        while cur != self.identity:
            cur = self.table[cur][i]
            k += 1
        return k

    @property
    def exponent(self) -> int:
        e = 1
        for i in range(self.order):
            k = self.element_order(i)
            e = e * k // gcd(e, k)
        return e

    def class_of(self, form: BinQuadForm) -> int:
        return self.index[form.reduced()]

    def is_cyclic(self) -> bool:
        return self.exponent == self.order


def class_group(disc: Discriminant) -> ClassGroup:
    """Enumerate reduced forms of discriminant d c^2 and tabulate composition."""
    D = disc.D
    forms = reduced_forms(D)
    index = {f: i for i, f in enumerate(forms)}
    table = [[index[f.compose(g)] for g in forms] for f in forms]
    identity = index[principal_form(D)]
    log.info(f"Class group for {disc}: h={len(forms)}")
    return ClassGroup(disc=disc, forms=forms, table=table, identity=identity)


def heegner_point(form: BinQuadForm):
    """CM point tau = (-b + sqrt(D)) / (2a) in the upper half plane."""
    D = form.discriminant
    if D >= 0 or form.a <= 0:
        raise DomainError(f"form {form} is not positive definite")
    return mp.mpc(-form.b, mp.sqrt(-D)) / (2 * form.a)


@dataclass(frozen=True)
class RingClassChar:
    """Character of Pic(O_c) with values zeta_m^k, stored as exponents mod m."""

    exponents: Tuple[int, ...]
    m: int
    conductor: int = 1

    @property
    def order(self) -> int:
        return self.m

    def is_trivial(self) -> bool:
        return self.m == 1

    def exponent(self, i: int) -> int:
        return self.exponents[i]

    def value(self, i: int) -> CyclotomicNumber:
        return CyclotomicNumber.root_of_unity(self.m, self.exponents[i])

    def numeric(self, i: int, j: int = 1):
        """Value at class i under the embedding zeta_m -> exp(2 pi i j / m)."""
        return mp.expjpi(mp.mpf(2 * j * self.exponents[i]) / self.m)

    def conjugate(self) -> "RingClassChar":
        return RingClassChar(tuple((-k) % self.m for k in self.exponents), self.m, self.conductor)

    def power(self, k: int) -> "RingClassChar":
        return _normalize_character([e * k for e in self.exponents], self.m, self.conductor)


def _normalize_character(exponents: List[int], modulus: int, conductor: int) -> RingClassChar:
    g = modulus
    for e in exponents:
        g = gcd(g, e % modulus)
    m = modulus // g
    return RingClassChar(tuple((e % modulus) // g for e in exponents), m, conductor)


def characters(cg: ClassGroup) -> List[RingClassChar]:
    """All characters of the class group, trivial character first.

    Characters are extended one cyclic step at a time: if g^k is the first
    power of g landing in the current subgroup H, every character psi of H has
    exactly k extensions, given by the solutions b of k*b = psi(g^k) mod e.
    """
    e = cg.exponent
    members: Dict[int, Tuple[int, ...]] = {cg.identity: ()}
    gens: List[int] = []
    chars: List[List[int]] = [[]]
    for g in range(cg.order):
        if g in members:
            continue
        k, cur = 1, g
        while cur not in members:
            cur = cg.compose(cur, g)
            k += 1
        landing = members[cur]
        new_chars = []
        for psi in chars:
            target = sum(psi[t] * landing[t] for t in range(len(gens))) % e
            for b in range(e):
                if (k * b - target) % e == 0:
                    new_chars.append(psi + [b])
        new_members = {}
        for h, coords in members.items():
            cur = h
            for j in range(k):
                new_members[cur] = coords + (j,)
                cur = cg.compose(cur, g)
        members = new_members
        gens.append(g)
        chars = new_chars
    result = []
    for psi in chars:
        values = [sum(psi[t] * members[i][t] for t in range(len(gens))) % e for i in range(cg.order)]
        result.append(_normalize_character(values, e, cg.disc.c))
    result.sort(key=lambda chi: (chi.m, chi.exponents))
    return result


def antinorm(chi: RingClassChar) -> RingClassChar:
    """xi = chi^(1 - Frob_inf); on a class group character this is chi^2."""
    return chi.power(2)


def roots_of_unity_count(d: int) -> int:
    return {-3: 6, -4: 4}.get(d, 2)


def char_image_prime(m: int) -> int:
    """p when the cyclic image of order m is a p-group, else 1."""
    if m == 1:
        return 1
    primes = factorint(m)
    return next(iter(primes)) if len(primes) == 1 else 1


@dataclass(frozen=True)
class OrderInvariants:
    h_K: int
    w_K: int
    h_c: int
    index_Hc_H1: int
    unit_index: Fraction
    m_xi: int
    w_frak_c: int
    w_order: int

    def as_dict(self) -> dict:
        return {
            "h_K": self.h_K,
            "w_K": self.w_K,
            "h_c": self.h_c,
            "index_Hc_H1": self.index_Hc_H1,
            "unit_index": str(self.unit_index),
            "m_xi": self.m_xi,
            "w_frak_c": self.w_frak_c,
            "w_order": self.w_order,
        }


def order_invariants(disc: Discriminant, xi: Optional[RingClassChar] = None,
                     cg: Optional[ClassGroup] = None) -> OrderInvariants:
    """Class numbers, unit counts, [H_c:H_1] and m(xi) for the order of conductor c."""
    if xi is not None and xi.conductor != disc.c:
        raise InputError(f"character conductor {xi.conductor} does not match c={disc.c}")
    h_c = cg.order if cg is not None else len(reduced_forms(disc.D))
    h_K = len(reduced_forms(disc.d))
    w_K = roots_of_unity_count(disc.d)
    w_order = w_K if disc.c == 1 else 2
    # Only +-1 can be congruent to 1 mod c for c >= 2, and -1 only when c = 2.
    if disc.c == 1:
        w_frak_c = w_K
    else:
        w_frak_c = 2 if disc.c == 2 else 1
    if h_c % h_K:
        raise DomainError(f"h_K={h_K} does not divide h_c={h_c}")
    return OrderInvariants(
        h_K=h_K,
        w_K=w_K,
        h_c=h_c,
        index_Hc_H1=h_c // h_K,
        unit_index=Fraction(w_K, w_order),
        m_xi=char_image_prime(xi.m) if xi is not None else 1,
        w_frak_c=w_frak_c,
        w_order=w_order,
    )


def ring_class_index_formula(disc: Discriminant) -> Fraction:
    """h(O_c)/h(O_K) from the class number formula for orders."""
    value = Fraction(disc.c, 1)
    for p in factorint(disc.c):
        value *= Fraction(p - kronecker(disc.d, p), p)
    w_K = roots_of_unity_count(disc.d)
    return value / Fraction(w_K, 2 if disc.c > 1 else w_K)
