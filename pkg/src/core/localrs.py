"""Exact local Rankin-Selberg computations for unramified GL2 representations.

Everything is a rational function in X = q^-s over Q(a1, a2, b1, b2), where
a1, a2 (resp. b1, b2) are the Satake parameters of the two representations.
The Kirillov model is used only through its support convention: the newform
Whittaker function vanishes on a(w^n) for n < 0 and is 1 at n = 0.
"""
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

import sympy
from sympy import Poly, cancel, fraction, symbols

from config.logging_config import log
from src.core.errors import DomainError, PoleError

X, q = symbols("X q")
a1, a2, b1, b2 = symbols("alpha1 alpha2 beta1 beta2")


@dataclass
class RationalFuncX:
    """A reduced fraction num/den of polynomials in X with den(0) = 1."""

    num: sympy.Expr
    den: sympy.Expr

    @classmethod
    def from_expr(cls, expr) -> "RationalFuncX":
        num, den = fraction(cancel(sympy.together(expr)))
        const = Poly(den, X).eval(0) if den.has(X) else den
        if const == 0:
            raise PoleError("denominator vanishes at X = 0")
        return cls(sympy.expand(num / const), sympy.expand(den / const))

    def as_expr(self):
        return self.num / self.den

    def __eq__(self, other):
        if not isinstance(other, RationalFuncX):
            other = RationalFuncX.from_expr(other)
        return cancel(self.num * other.den - other.num * self.den) == 0

    def __mul__(self, other):
        other_expr = other.as_expr() if isinstance(other, RationalFuncX) else other
        return RationalFuncX.from_expr(self.as_expr() * other_expr)

    def __truediv__(self, other):
        other_expr = other.as_expr() if isinstance(other, RationalFuncX) else other
        return RationalFuncX.from_expr(self.as_expr() / other_expr)

    def subs(self, mapping) -> "RationalFuncX":
        return RationalFuncX.from_expr(self.as_expr().subs(mapping))

    def evaluate(self, mapping):
        den = self.den.subs(mapping)
        if den == 0:
            raise PoleError(f"pole at {mapping}")
        return self.num.subs(mapping) / den

    def as_text(self) -> str:
        num = sympy.factor(self.num)
        den = sympy.factor(self.den)
        return f"({sympy.sstr(num)}) / ({sympy.sstr(den)})"

    def __str__(self):
        return self.as_text()


def whittaker_new(n: int, alpha1=a1, alpha2=a2, qq=q):
    """W_new(a(w^n)) = q^(-n/2) sum_{l+m=n} alpha1^l alpha2^m; zero for n < 0."""
    if n < 0:
        return sympy.Integer(0)
    return qq ** sympy.Rational(-n, 2) * sum(alpha1 ** l * alpha2 ** (n - l) for l in range(n + 1))


def whittaker_closed_form(n: int, alpha1=a1, alpha2=a2, qq=q):
    """The divided-difference form q^(-n/2) (alpha1^(n+1) - alpha2^(n+1)) / (alpha1 - alpha2)."""
    if n < 0:
        return sympy.Integer(0)
    return qq ** sympy.Rational(-n, 2) * cancel((alpha1 ** (n + 1) - alpha2 ** (n + 1)) / (alpha1 - alpha2))


def l_factor(alpha1=a1, alpha2=a2) -> RationalFuncX:
    return RationalFuncX.from_expr(1 / ((1 - alpha1 * X) * (1 - alpha2 * X)))


def whittaker_zeta(alpha1=a1, alpha2=a2) -> RationalFuncX:
    """sum_n W_new(a(w^n)) q^(-n(s-1/2)) in closed form.

    Summed as two geometric series from the divided-difference expression; the
    result is checked against 1/((1 - alpha1 X)(1 - alpha2 X)).
    """
    if alpha2 == 0 or alpha1 == alpha2:
        terms = 1 / (1 - alpha1 * X) if alpha2 == 0 else 1 / (1 - alpha1 * X) ** 2
        zeta = RationalFuncX.from_expr(terms)
    else:
        zeta = RationalFuncX.from_expr(
            (alpha1 / (1 - alpha1 * X) - alpha2 / (1 - alpha2 * X)) / (alpha1 - alpha2)
        )
    if zeta != l_factor(alpha1, alpha2):
        raise DomainError("Whittaker zeta integral does not match the standard L-factor")
    return zeta


def truncated_whittaker_zeta(alpha1: Fraction, alpha2: Fraction, x: Fraction, n_terms: int) -> Fraction:
    """Partial sum of sum_n h_n(alpha) x^n with exact rationals."""
    total = Fraction(0)
    h = Fraction(1)
    power = Fraction(1)
    a2_power = Fraction(1)
    for n in range(n_terms + 1):
        if n:
            a2_power *= alpha2
            h = alpha1 * h + a2_power
            power *= x
        total += h * power
    return total


def adjoint_local_factor(alpha1=a1, alpha2=a2) -> RationalFuncX:
    """L(Ad, s) = 1/((1 - X)(1 - (alpha1/alpha2) X)(1 - (alpha2/alpha1) X))."""
    return RationalFuncX.from_expr(
        1 / ((1 - X) * (1 - alpha1 / alpha2 * X) * (1 - alpha2 / alpha1 * X))
    )


def rs_closed_form(alpha1=a1, alpha2=a2, beta1=b1, beta2=b2) -> RationalFuncX:
    """(1 - a1 a2 b1 b2 X^2) / prod_{i,j} (1 - a_i b_j X)."""
    den = 1
    for a in (alpha1, alpha2):
        for b in (beta1, beta2):
            den *= (1 - a * b * X)
    return RationalFuncX.from_expr((1 - alpha1 * alpha2 * beta1 * beta2 * X ** 2) / den)


@dataclass
class LocalZetaResult:
    zeta: RationalFuncX
    closed_form: RationalFuncX
    matches_closed_form: bool
    psi: Optional[RationalFuncX] = None
    pairing_at_1: Optional[sympy.Expr] = None


def local_rs_zeta(alpha1=a1, alpha2=a2, beta1=b1, beta2=b2, dual: bool = False) -> LocalZetaResult:
    """Z(W1, W2, s) = sum_n W1 W2(a(w^n)) q^(n(1-s)) for two unramified newforms.

    W1 W2(a(w^n)) q^n = h_n(alpha) h_n(beta), and the product of the two divided
    differences expands into four geometric series in a_i b_j X. With
    ``dual`` the relation beta_i = 1/alpha_i is imposed, Psi = Z / ((1 + X) L(Ad))
    is returned together with the pairing value at s = 1.
    """
    if dual:
        beta1, beta2 = 1 / alpha1, 1 / alpha2
    series = 0
    for a, sa in ((alpha1, 1), (alpha2, -1)):
        for b, sb in ((beta1, 1), (beta2, -1)):
            series += sa * sb * a * b / (1 - a * b * X)
    zeta = RationalFuncX.from_expr(series / ((alpha1 - alpha2) * (beta1 - beta2)))
    closed = rs_closed_form(alpha1, alpha2, beta1, beta2)
    result = LocalZetaResult(zeta=zeta, closed_form=closed, matches_closed_form=(zeta == closed))
    if dual:
        adjoint = adjoint_local_factor(alpha1, alpha2)
        result.psi = zeta / RationalFuncX.from_expr((1 + X) * adjoint.as_expr())
        result.pairing_at_1 = sympy.simplify(((1 + X) * adjoint.as_expr()).subs(X, 1 / q))
    return result


def psi(alpha1=a1, alpha2=a2) -> RationalFuncX:
    """Normalised local period Psi(W_new, W~_new, s); identically 1."""
    return local_rs_zeta(alpha1, alpha2, dual=True).psi


def unramified_factor_identity() -> bool:
    """L_p(f x f*, s) = zeta_p(s) L_p(Ad, s) as rational functions, with beta = 1/alpha."""
    rs = RationalFuncX.from_expr(
        1 / ((1 - X) ** 2 * (1 - a1 / a2 * X) * (1 - a2 / a1 * X))
    )
    return rs == RationalFuncX.from_expr(adjoint_local_factor().as_expr() / (1 - X))


def _h(alphas: Sequence[Fraction], n_terms: int) -> List[Fraction]:
    x1, x2 = alphas
    out, h, p2 = [], Fraction(1), Fraction(1)
    for n in range(n_terms + 1):
        if n:
            p2 *= x2
            h = x1 * h + p2
        out.append(h)
    return out


def truncated_rs_series(alphas, betas, x: Fraction, n_terms: int) -> Fraction:
    ha, hb = _h(alphas, n_terms), _h(betas, n_terms)
    total, power = Fraction(0), Fraction(1)
    for n in range(n_terms + 1):
        total += ha[n] * hb[n] * power
        power *= x
    return total


def _r(value: Fraction) -> sympy.Rational:
    return sympy.Rational(value.numerator, value.denominator)


def _random_parameter(rng: random.Random) -> Fraction:
    while True:
        value = Fraction(rng.randint(-9, 9), rng.randint(10, 19))
        if value:
            return value


def specialisation_check(trials: int = 100, n_terms: int = 80, tolerance: float = 1e-25,
                         seed: int = 20240229) -> dict:
    """Compare the closed form with the truncated double series at random rational points."""
    rng = random.Random(seed)
    closed = rs_closed_form()
    worst = Fraction(0)
    failures = 0
    for _ in range(trials):
        alphas = (_random_parameter(rng), _random_parameter(rng))
        betas = (_random_parameter(rng), _random_parameter(rng))
        x = Fraction(rng.randint(1, 9), rng.randint(30, 60))
        exact = closed.evaluate({a1: _r(alphas[0]), a2: _r(alphas[1]), b1: _r(betas[0]), b2: _r(betas[1]), X: _r(x)})
        exact = Fraction(int(exact.p), int(exact.q))
        err = abs(exact - truncated_rs_series(alphas, betas, x, n_terms))
        worst = max(worst, err)
        if err > Fraction(tolerance):
            failures += 1
    log.info(f"Local specialisation check: {trials} trials, worst error {float(worst):.3e}")
    return {"trials": trials, "failures": failures, "worst_error": float(worst), "passed": failures == 0}
