"""Elliptic units at CM points of an imaginary quadratic order.

For a class sigma of Pic(O_c) with lattice L = Z + tau_sigma Z the base value is

    g_sigma = prod_{f | c} Delta(L O_f)^mu(c/f),

which is homogeneous of degree 0 for c > 1, and e_c = g^c is the conjugate
eps(c)^sigma of prod_{f|c} Delta(q^f)^(c mu(c/f)). For c = 1 the base value is
||Delta||(tau_sigma) = y^6 |Delta(tau_sigma)|, which is not a unit.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath as mp
from sympy import Poly, discriminant, divisors, factorint, isprime, primerange, symbols
from sympy.core.intfunc import igcdex
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from config.logging_config import log
from config.settings import get_settings
from src.core.cyclotomic import CyclotomicNumber
from src.core.errors import (
    AuxiliaryPrimeError,
    DomainError,
    InputError,
    PrecisionError,
    RecognitionError,
)
from src.core.modfunc import delta_eval, log_delta_norm, siegel_g
from src.core.qorders import (
    BinQuadForm,
    ClassGroup,
    Discriminant,
    RingClassChar,
    char_image_prime,
    class_group,
    heegner_point,
    kronecker,
    mobius,
    order_invariants,
    prime_form,
)
from src.core.recognition import round_to_integer

GUARD_BITS = 16

# x + y sqrt(d) with rational x, y
QuadElement = Tuple[Fraction, Fraction]


def _qmul(u: QuadElement, v: QuadElement, d: int) -> QuadElement:
    return (u[0] * v[0] + d * u[1] * v[1], u[0] * v[1] + u[1] * v[0])


def cm_point_element(form: BinQuadForm, disc: Discriminant) -> QuadElement:
    """tau = -b/(2a) + (c/(2a)) sqrt(d) for a form of discriminant d c^2."""
    return (Fraction(-form.b, 2 * form.a), Fraction(disc.c, 2 * form.a))


def _integer_basis(vectors: Sequence[Tuple[int, int]]) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    """Hermite basis (g, y1), (0, h) of the Z-span of integer vectors in Z^2."""
    g, y1 = 0, 0
    for x, y in vectors:
        if x:
            s, t, new_g = igcdex(g, x)
            g, y1 = new_g, s * y1 + t * y
    if g < 0:
        g, y1 = -g, -y1
    h = 0
    for x, y in vectors if g else ():
        h = gcd(h, y - (x // g) * y1)
    if not g or not h:
        raise DomainError("generators do not span a lattice")
    h = abs(h)
    return (g, y1 % h), (0, h)


def lattice_basis(generators: Sequence[QuadElement]) -> Tuple[QuadElement, QuadElement]:
    """Z-basis of the lattice spanned by elements of Q(sqrt d)."""
    den = 1
    for x, y in generators:
        den = den * x.denominator // gcd(den, x.denominator)
        den = den * y.denominator // gcd(den, y.denominator)
    ints = [(int(x * den), int(y * den)) for x, y in generators]
    (g, y1), (_, h) = _integer_basis(ints)
    return (Fraction(g, den), Fraction(y1, den)), (Fraction(0), Fraction(h, den))


def lattice_times_order(tau: QuadElement, f: int, d: int) -> Tuple[QuadElement, QuadElement]:
    """Basis of (Z + tau Z) O_f with O_f = Z + f omega_K Z, omega_K = (d + sqrt d)/2."""
    one = (Fraction(1), Fraction(0))
    f_omega = (Fraction(f * d, 2), Fraction(f, 2))
    gens = [one, tau, f_omega, _qmul(tau, f_omega, d)]
    return lattice_basis(gens)


def _numeric(u: QuadElement, d: int):
    return mp.mpf(u[0].numerator) / u[0].denominator + \
        mp.mpf(u[1].numerator) / u[1].denominator * mp.sqrt(d)


def lattice_delta(basis: Tuple[QuadElement, QuadElement], d: int, prec: int):
    """Delta(w1 Z + w2 Z) = w1^-12 Delta(w2/w1) with Im(w2/w1) > 0."""
    with mp.workprec(prec + GUARD_BITS):
        w1, w2 = _numeric(basis[0], d), _numeric(basis[1], d)
        ratio = w2 / w1
        if mp.im(ratio) < 0:
            w1, w2 = w2, w1
            ratio = w2 / w1
        return delta_eval(ratio, prec) / w1 ** 12


def base_values(disc: Discriminant, prec: int = 256, cg: Optional[ClassGroup] = None) -> List:
    """g_sigma for every class (c > 1), or ||Delta||(tau_sigma) for c = 1."""
    cg = cg or class_group(disc)
    values = []
    with mp.workprec(prec + GUARD_BITS):
        for form in cg.forms:
            if disc.c == 1:
                values.append(mp.exp(log_delta_norm(heegner_point(form), 6, prec)))
                continue
            tau = cm_point_element(form, disc)
            value = mp.mpc(1)
            for f in divisors(disc.c):
                mu = mobius(disc.c // f)
                if mu:
                    value *= lattice_delta(lattice_times_order(tau, f, disc.d), disc.d, prec) ** mu
            values.append(value)
    return values


def elliptic_unit_conjugates(disc: Discriminant, prec: int = 256,
                             cg: Optional[ClassGroup] = None) -> List[Tuple[int, object]]:
    """(class index, eps(c)^sigma); for c = 1 these are Delta(tau_sigma), not units."""
    cg = cg or class_group(disc)
    if disc.c == 1:
        log.warning(f"c = 1 for {disc}: conjugates are Delta values, not units")
        with mp.workprec(prec + GUARD_BITS):
            return [(i, delta_eval(heegner_point(form), prec)) for i, form in enumerate(cg.forms)]
    with mp.workprec(prec + GUARD_BITS):
        return [(i, g ** disc.c) for i, g in enumerate(base_values(disc, prec, cg))]


@dataclass
class MinimalPolynomial:
    """Integer polynomial prod (X - kappa v_sigma), coefficients lowest degree first."""

    coeffs: List[int]
    kappa: Fraction
    residual: object

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def constant_term(self) -> int:
        return self.coeffs[0]

    def derivative(self) -> List[int]:
        return [k * c for k, c in enumerate(self.coeffs)][1:]

    def discriminant(self) -> int:
        x = symbols("x")
        return int(discriminant(Poly(list(reversed(self.coeffs)), x)))

    def unit_content(self) -> Tuple[bool, int]:
        """(is the norm of the base values a unit up to powers of kappa, remaining content)."""
        const = abs(self.constant_term)
        k = self.kappa ** self.degree
        content = Fraction(const) / k if k else Fraction(0)
        return content == 1, content

    def to_json(self) -> dict:
        return {"coeffs": [str(c) for c in self.coeffs], "kappa": str(self.kappa),
                "residual": mp.nstr(self.residual, 5)}

    @classmethod
    def from_json(cls, data: dict) -> "MinimalPolynomial":
        return cls(coeffs=[int(c) for c in data["coeffs"]], kappa=Fraction(data["kappa"]),
                   residual=mp.mpf(data["residual"]))


def _poly_from_roots(roots: Sequence) -> List:
    coeffs = [mp.mpc(1)]
    for r in roots:
        shifted = [mp.mpc(0)] + coeffs
        for k in range(len(coeffs)):
            shifted[k] -= r * coeffs[k]
        coeffs = shifted
    return coeffs


def recognize_minpoly(values: Sequence, prec: int = 256, content_prime: int = 1,
                      max_power: int = 0) -> MinimalPolynomial:
    """Integer polynomial with roots kappa * values, kappa = p^(+-j) for the smallest j that works."""
    tol = mp.mpf(2) ** (-prec // 4)
    with mp.workprec(prec + GUARD_BITS):
        values = [mp.mpc(v) for v in values]
        sep = mp.mpf(2) ** (-prec // 2)
        for i in range(len(values)):
            for j in range(i):
                if abs(values[i] - values[j]) < sep * max(1, abs(values[i])):
                    raise RecognitionError("values are not pairwise distinct at working precision")
        candidates = [Fraction(1)]
        if content_prime > 1:
            for j in range(1, max_power + 1):
                candidates += [Fraction(content_prime) ** j, Fraction(1, content_prime ** j)]
        for kappa in candidates:
            scale = mp.mpf(kappa.numerator) / kappa.denominator
            coeffs = _poly_from_roots([scale * v for v in values])
            residual = max(abs(c - mp.nint(mp.re(c))) for c in coeffs)
            magnitude = max(abs(c) for c in coeffs)
            if residual < tol and magnitude < mp.mpf(2) ** (prec // 2):
                ints = [round_to_integer(mp.re(c), tol) for c in coeffs]
                return MinimalPolynomial(coeffs=ints, kappa=kappa, residual=residual)
    raise RecognitionError(f"no integral minimal polynomial at {prec} bits")


def recognize_unit_minpoly(disc: Discriminant, prec: int = 256, cg: Optional[ClassGroup] = None,
                           retries: Optional[int] = None) -> Tuple[MinimalPolynomial, List, int]:
    """Recognise the minimal polynomial of the base values, doubling precision on failure.

    Returns (minpoly, base values at the successful precision, that precision).
    """
    if disc.c == 1:
        raise InputError("base values for c = 1 are not algebraic units")
    cg = cg or class_group(disc)
    retries = retries or get_settings().max_precision_retries
    p = content_prime(disc.c)
    state = {"prec": prec}
    for attempt in Retrying(stop=stop_after_attempt(retries),
                            retry=retry_if_exception_type((PrecisionError, RecognitionError)),
                            reraise=True):
        with attempt:
            current = state["prec"]
            if attempt.retry_state.attempt_number > 1:
                current = state["prec"] = current * 2
                log.warning(f"Raising precision to {current} bits for minimal polynomial of {disc}")
            values = base_values(disc, current, cg)
            minpoly = recognize_minpoly(values, current, p, 12 * disc.c)
    log.info(f"Minimal polynomial for {disc}: degree {minpoly.degree}, kappa {minpoly.kappa}")
    return minpoly, values, state["prec"]


def content_prime(c: int) -> int:
    """Norm(1 - zeta_c) = Phi_c(1): p for c a power of p, 1 otherwise."""
    return char_image_prime(c)


def siegel_content_readings(c: int) -> Dict[str, int]:
    """m(c) under the two readings of the content: nontrivial for prime c only, or for prime powers."""
    factors = factorint(c)
    p = next(iter(factors)) if len(factors) == 1 else 1
    return {"prime": p if isprime(c) else 1, "prime power": p}


@dataclass
class UnitVector:
    """sum_sigma weight_sigma [v_sigma] times an exact scalar in Q(zeta_m)."""

    disc: Discriminant
    base: List
    weights: List[CyclotomicNumber]
    scalar: CyclotomicNumber
    kind: str = "u_xi"
    minpoly: Optional[MinimalPolynomial] = None
    prec: int = 256
    notes: Dict[str, object] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.scalar.m

    def scaled(self, factor) -> "UnitVector":
        return UnitVector(disc=self.disc, base=self.base, weights=self.weights,
                          scalar=self.scalar * factor, kind=self.kind, minpoly=self.minpoly,
                          prec=self.prec, notes=dict(self.notes))


def _check_character(disc: Discriminant, xi: RingClassChar, cg: ClassGroup):
    if xi.is_trivial():
        raise InputError("unit vectors need a nontrivial character")
    if xi.conductor != disc.c or len(xi.exponents) != cg.order:
        raise InputError("character does not belong to this order")


def unit_vector(disc: Discriminant, xi: RingClassChar, which: str = "u_xi", prec: int = 256,
                cg: Optional[ClassGroup] = None, base: Optional[List] = None,
                minpoly: Optional[MinimalPolynomial] = None) -> UnitVector:
    """u_xi (scalar m(xi)), u_Stark = h_K/(6 m w_K) u_xi, u_f = [H_c:H_1] w_K/2 u_Stark."""
    if which not in ("u_xi", "u_stark", "u_f"):
        raise InputError(f"unknown unit vector {which!r}")
    cg = cg or class_group(disc)
    _check_character(disc, xi, cg)
    inv = order_invariants(disc, xi, cg)
    base = base if base is not None else base_values(disc, prec, cg)
    weights = [xi.value(i) for i in range(cg.order)]
    scalar = Fraction(inv.m_xi)
    if which in ("u_stark", "u_f"):
        scalar *= Fraction(inv.h_K, 6 * inv.m_xi * inv.w_K)
    if which == "u_f":
        scalar *= Fraction(inv.index_Hc_H1 * inv.w_K, 2)
    notes = {"non_unit_base": disc.c == 1, "m_xi": inv.m_xi}
    return UnitVector(disc=disc, base=base, weights=weights,
                      scalar=CyclotomicNumber.rational(xi.m, scalar), kind=which,
                      minpoly=minpoly, prec=prec, notes=notes)


def split_primes(disc: Discriminant, count: int, start: int = 2) -> List[int]:
    """Primes l split in K and coprime to the conductor."""
    out = []
    for ell in primerange(start, 10**6):
        if kronecker(disc.d, ell) == 1 and disc.c % ell:
            out.append(ell)
            if len(out) == count:
                break
    return out


def unit_vector_aux(disc: Discriminant, xi: RingClassChar, ell: int, prec: int = 256,
                    cg: Optional[ClassGroup] = None, convention: str = "l",
                    base: Optional[List] = None) -> UnitVector:
    """u_xi via an auxiliary split prime l: base g_sigma / g_(sigma t), scalar m/(1 - xi(l-bar)).

    t is the class of l (convention "l") or of l-bar (convention "lbar").
    """
    cg = cg or class_group(disc)
    _check_character(disc, xi, cg)
    if not isprime(ell) or kronecker(disc.d, ell) != 1 or disc.c % ell == 0:
        raise InputError(f"{ell} is not a split prime coprime to the conductor")
    inv = order_invariants(disc, xi, cg)
    ell_class = cg.class_of(prime_form(disc.D, ell))
    ell_bar = cg.inverse(ell_class)
    denominator = 1 - xi.value(ell_bar)
    if denominator.is_zero():
        raise AuxiliaryPrimeError(f"xi is trivial on the class of the prime above {ell}")
    t = ell_class if convention == "l" else ell_bar
    base = base if base is not None else base_values(disc, prec, cg)
    with mp.workprec(prec + GUARD_BITS):
        shifted = [base[i] / base[cg.compose(i, t)] for i in range(cg.order)]
    weights = [xi.value(i) for i in range(cg.order)]
    scalar = CyclotomicNumber.rational(xi.m, inv.m_xi) / denominator
    return UnitVector(disc=disc, base=shifted, weights=weights, scalar=scalar, kind="u_xi_aux",
                      prec=prec, notes={"ell": ell, "convention": convention, "m_xi": inv.m_xi,
                                        "non_unit_base": disc.c == 1})


def integrality_check(u_stark: UnitVector, inv=None) -> Dict[str, object]:
    """6 m(xi) w_K u_Stark: integral scalar and weights, base values units up to content."""
    inv = inv or order_invariants(u_stark.disc)
    m_xi = u_stark.notes.get("m_xi", char_image_prime(u_stark.m))
    scaled = u_stark.scalar * (6 * m_xi * inv.w_K)
    report: Dict[str, object] = {
        "scaled_scalar": scaled.to_json(),
        "scalar_integral": scaled.is_integral(),
        "weights_integral": all(w.is_integral() for w in u_stark.weights),
        "flagged_non_unit": bool(u_stark.notes.get("non_unit_base")),
    }
    if u_stark.disc.c == 1:
        report["unit"] = None
        return report
    if u_stark.minpoly is None:
        raise RecognitionError("integrality check needs a recognised minimal polynomial")
    is_unit, content = u_stark.minpoly.unit_content()
    report["constant_term"] = u_stark.minpoly.constant_term
    report["content"] = str(content)
    report["unit"] = is_unit or _is_power_of(content, content_prime(u_stark.disc.c))
    return report


def _is_power_of(value: Fraction, p: int) -> bool:
    if value == 1:
        return True
    if p <= 1 or value <= 0:
        return False
    num, den = value.numerator, value.denominator
    for part in (num, den):
        while part % p == 0:
            part //= p
        if part != 1:
            return False
    return True


def stark_log_sum(disc: Discriminant, xi: RingClassChar, prec: int = 256,
                  cg: Optional[ClassGroup] = None, embedding: int = 1,
                  base: Optional[List] = None):
    """sum_sigma xi(sigma) log|e_c^sigma| (c > 1) or sum xi log ||Delta||(tau_sigma) (c = 1)."""
    cg = cg or class_group(disc)
    base = base if base is not None else base_values(disc, prec, cg)
    with mp.workprec(prec + GUARD_BITS):
        power = disc.c if disc.c > 1 else 1
        total = mp.fsum(xi.numeric(i, embedding) * power * mp.log(abs(base[i])) for i in range(cg.order))
        return mp.re(total)


def stark_prediction_candidates(disc: Discriminant, xi: RingClassChar,
                                cg: Optional[ClassGroup] = None) -> Dict[str, Fraction]:
    """Candidate constants k with L'(xi, 0) = k * sum xi log|eps(c)^sigma|."""
    cg = cg or class_group(disc)
    inv = order_invariants(disc, xi, cg)
    c = disc.c
    if c == 1:
        return {"w_frak_c": Fraction(-1, 6 * inv.w_frak_c), "w_order": Fraction(-1, 6 * inv.w_order)}
    return {"w_frak_c": Fraction(-1, 6 * c * inv.w_frak_c), "w_order": Fraction(-1, 6 * c * inv.w_order)}


def ray_class_norm(disc: Discriminant, prec: int = 256) -> List[Dict[str, object]]:
    """Products of g(0, n/c, tau)^(12c) over (Z/c)^x and over n <= c/2 at the CM points of O_K."""
    c = disc.c
    if c < 2:
        raise InputError("ray class norm needs c >= 2")
    out = []
    cg_k = class_group(Discriminant(disc.d, 1))
    with mp.workprec(prec + GUARD_BITS):
        for form in cg_k.forms:
            tau = heegner_point(form)
            full = half = mp.mpf(0)
            for n in range(1, c):
                if gcd(n, c) != 1:
                    continue
                term = 12 * c * mp.log(abs(siegel_g(0, mp.mpf(n) / c, tau, prec)))
                full += term
                if 2 * n <= c:
                    half += term
            eps = mp.fsum(c * mobius(c // f) * mp.log(abs(delta_eval(f * tau, prec)))
                          for f in divisors(c) if mobius(c // f))
            out.append({
                "form": str(form),
                "log_full": full,
                "log_half": half,
                "log_eps": eps,
                "full_is_half_squared": abs(full - 2 * half) < mp.mpf(2) ** (-prec // 2) * max(1, abs(full)),
                "log_ratio_to_eps": full - eps,
            })
    return out
