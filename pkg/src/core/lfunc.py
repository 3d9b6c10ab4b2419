"""L-functions attached to imaginary dihedral forms.

L(eta, 0) is exact (generalised Bernoulli numbers). L'(xi, 0) is computed from
Epstein zeta functions of the reduced forms through the incomplete gamma
representation

    Lambda_Q(s) = sum' [a^-s G(s, a) + a^(s-1) G(1-s, a)] + 1/(s-1) - 1/s,
    a = 2 pi Q(v) / sqrt|D|,   Z_Q(s) = (2 pi/sqrt|D|)^s Lambda_Q(s) / Gamma(s).

Nothing in this module evaluates eta, Delta or any other modular function, so
the Stark identities checked against it are not circular.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Dict, List, Optional, Sequence, Union

import mpmath as mp
from sympy import factorint

from config.logging_config import log
from src.core.cyclotomic import CyclotomicNumber
from src.core.errors import InputError, PoleError, PrecisionError, RecognitionError
from src.core.qorders import (
    BinQuadForm,
    ClassGroup,
    Discriminant,
    RingClassChar,
    class_group,
    kronecker,
    order_invariants,
    prime_form,
    representation_counts,
)
from src.core.recognition import recognize_stable_rational
from src.core import localrs

GUARD_BITS = 16


@dataclass(frozen=True)
class EpsteinForm:
    """A positive definite form together with the weight used for its partial zeta."""

    form: BinQuadForm
    weight: int = 2

    @property
    def D(self) -> int:
        return self.form.discriminant

    @property
    def det_normalization(self):
        """sqrt|D| / 2, the covolume of the lattice the form measures."""
        return mp.sqrt(-self.D) / 2



def _cutoff(prec: int):
    return mp.mpf(prec + GUARD_BITS + 10) * mp.log(2)


def _terms(Q: BinQuadForm, cutoff):
    D = -Q.discriminant
    q_max = int(cutoff * mp.sqrt(D) / (2 * mp.pi)) + 1
    scale = 2 * mp.pi / mp.sqrt(D)
    return [(scale * n, r) for n, r in sorted(representation_counts(Q, q_max).items())]


def epstein_lambda(Q: BinQuadForm, s, prec: int = 256, cutoff=None):
    """The completed Epstein zeta Lambda_Q(s)."""
    with mp.workprec(prec + GUARD_BITS):
        s = mp.mpmathify(s)
        if s == 0 or s == 1:
            raise PoleError(f"Lambda_Q has a pole at s = {s}", residue=-1 if s == 0 else 1)
        cutoff = _cutoff(prec) if cutoff is None else mp.mpf(cutoff)
        total = mp.fsum(
            r * (mp.power(alpha, -s) * mp.gammainc(s, alpha) + mp.power(alpha, s - 1) * mp.gammainc(1 - s, alpha))
            for alpha, r in _terms(Q, cutoff)
        )
        return total + 1 / (s - 1) - 1 / s


def epstein_Z(Q: BinQuadForm, s, prec: int = 256):
    """Z_Q(s) = sum' Q(x, y)^(-s), continued to all s != 1."""
    with mp.workprec(prec + GUARD_BITS):
        s = mp.mpmathify(s)
        D = -Q.discriminant
        if s == 1:
            raise PoleError("Z_Q has a pole at s = 1", residue=2 * mp.pi / mp.sqrt(D))
        if s == 0:
            return mp.mpf(-1)
        if mp.im(s) == 0 and mp.re(s) < 0 and mp.re(s) == int(mp.re(s)):
            return mp.mpf(0)
        return mp.power(2 * mp.pi / mp.sqrt(D), s) * epstein_lambda(Q, s, prec) * mp.rgamma(s)


def _deriv0(Q: BinQuadForm, cutoff):
    lam0 = mp.fsum(r * (mp.e1(alpha) + mp.exp(-alpha) / alpha) for alpha, r in _terms(Q, cutoff)) - 1
    return lam0 - mp.euler - mp.log(mp.pi / EpsteinForm(Q).det_normalization)


def epstein_Z_deriv0(Q: Union[BinQuadForm, EpsteinForm], prec: int = 256, cutoff=None, verify: bool = True):
    """Z_Q'(0) = Lambda_0 - gamma - log(2 pi / sqrt|D|), Lambda_0 the constant term of Lambda_Q at 0."""
    if isinstance(Q, EpsteinForm):
        Q = Q.form
    if Q.discriminant >= 0 or Q.a <= 0:
        raise InputError(f"form {Q} is not positive definite")
    with mp.workprec(prec + GUARD_BITS):
        cutoff = _cutoff(prec) if cutoff is None else mp.mpf(cutoff)
        value = _deriv0(Q, cutoff)
        if verify:
            coarse = _deriv0(Q, cutoff * 3 / 4)
            if abs(value - coarse) > mp.mpf(2) ** (-prec // 2):
                raise PrecisionError(f"Epstein tail for {Q} exceeds tolerance at cutoff {mp.nstr(cutoff, 5)}")
        return +value


@lru_cache(maxsize=256)
def _form_derivative(Q: BinQuadForm, prec: int):
    return epstein_Z_deriv0(Q, prec)


def class_zeta_derivatives(disc: Discriminant, prec: int = 256, cg: Optional[ClassGroup] = None) -> List:
    """Z'_Q(0) for every reduced form, in the order of ``cg``."""
    cg = cg or class_group(disc)
    return [_form_derivative(Q, prec) for Q in cg.forms]


def hecke_Lprime0(disc: Discriminant, xi: RingClassChar, prec: int = 256,
                  embeddings: Optional[Sequence[int]] = None, weight: Optional[int] = None,
                  cg: Optional[ClassGroup] = None) -> Dict[int, object]:
    """L'(xi, 0) = (1/w) sum_A xi(A) Z'_{Q_A}(0), one real value per embedding of Q(zeta_m).

    ``weight`` defaults to the number of units of the order.
    """
    if xi.is_trivial():
        raise PoleError("L(xi, s) has the zeta_K pole for trivial xi")
    cg = cg or class_group(disc)
    if weight is None:
        weight = order_invariants(disc, cg=cg).w_order
    forms = [EpsteinForm(Q, weight) for Q in cg.forms]
    derivs = class_zeta_derivatives(disc, prec, cg)
    if embeddings is None:
        embeddings = [j for j in range(1, xi.m) if gcd(j, xi.m) == 1]
    values = {}
    with mp.workprec(prec + GUARD_BITS):
        for j in embeddings:
            total = mp.fsum(xi.numeric(i, j) * derivs[i] / forms[i].weight for i in range(cg.order))
            if abs(mp.im(total)) > mp.mpf(2) ** (-prec // 2) * max(1, abs(total)):
                log.warning(f"L'(xi, 0) has imaginary part {mp.nstr(mp.im(total), 5)} at embedding {j}")
            values[j] = mp.re(total)
    return values


def dirichlet_L0(d: int) -> Fraction:
    """L(eta, 0) = -B_{1,eta} = -(1/|d|) sum_{a=1}^{|d|} eta(a) a, exact.

    Zero for even (real quadratic) characters.
    """
    if d == 0 or d % 4 not in (0, 1):
        raise InputError(f"{d} is not a discriminant")
    if d > 0:
        log.warning(f"eta = ({d}/.) is even; L(eta, 0) vanishes")
    n = abs(d)
    total = sum(kronecker(d, a) * a for a in range(1, n + 1))
    return Fraction(-total, n)


@dataclass
class AdjointLData:
    L_eta_0: Fraction
    L_xi_prime_0: Dict[int, object]
    L_Ad_prime_0: Dict[int, object]
    closed_form_L_eta_0: Fraction = Fraction(0)
    bernoulli_ratio: Fraction = Fraction(0)

    def value(self, embedding: Optional[int] = None):
        if embedding is None:
            embedding = min(self.L_Ad_prime_0)
        return self.L_Ad_prime_0[embedding]


def adjoint_Lprime0(disc: Discriminant, xi: RingClassChar, prec: int = 256,
                    cg: Optional[ClassGroup] = None, weight: Optional[int] = None) -> AdjointLData:
    """L'(Ad, 0) = L(eta, 0) L'(xi, 0), with the Bernoulli value of L(eta, 0)."""
    cg = cg or class_group(disc)
    inv = order_invariants(disc, cg=cg)
    l_eta = dirichlet_L0(disc.d)
    l_xi = hecke_Lprime0(disc, xi, prec, cg=cg, weight=weight)
    closed_form = Fraction(-inv.h_K, inv.w_K)
    ratio = l_eta / closed_form
    if ratio != 1:
        log.info(f"L(eta, 0) = {l_eta} differs from -h_K/w_K = {closed_form} by the factor {ratio}")
    with mp.workprec(prec + GUARD_BITS):
        l_ad = {j: mp.mpf(l_eta.numerator) / l_eta.denominator * v for j, v in l_xi.items()}
    return AdjointLData(L_eta_0=l_eta, L_xi_prime_0=l_xi, L_Ad_prime_0=l_ad,
                        closed_form_L_eta_0=closed_form, bernoulli_ratio=ratio)


def _poly_mul(f: List[CyclotomicNumber], g: List[CyclotomicNumber]) -> List[CyclotomicNumber]:
    m = (f or g)[0].m
    out = [CyclotomicNumber.zero(m) for _ in range(len(f) + len(g) - 1)]
    for i, a in enumerate(f):
        for j, b in enumerate(g):
            out[i + j] = out[i + j] + a * b
    return out


def adjoint_euler_factor(disc: Discriminant, xi: RingClassChar, p: int,
                         cg: Optional[ClassGroup] = None) -> List[CyclotomicNumber]:
    """Coefficients (lowest first) of the polynomial 1/L_p(Ad, s) in X = p^-s.

    L_p(Ad) = L_p(eta) L_p(xi); xi vanishes on primes dividing the conductor.
    """
    cg = cg or class_group(disc)
    m = xi.m
    one = CyclotomicNumber.rational(m, 1)
    eta = kronecker(disc.d, p)
    poly = [one, CyclotomicNumber.rational(m, -eta)]
    if disc.c % p == 0:
        xi_part = [one]
    elif eta == -1:
        xi_part = [one, CyclotomicNumber.zero(m), -one]
    else:
        pf = prime_form(disc.D, p)
        i = cg.class_of(pf)
        if eta == 0:
            xi_part = [one, -xi.value(i)]
        else:
            j = cg.class_of(pf.inverse())
            xi_part = [one, -(xi.value(i) + xi.value(j)), xi.value(i) * xi.value(j)]
    out = _poly_mul(poly, xi_part)
    while len(out) > 1 and out[-1].is_zero():
        out.pop()
    return out


def unramified_rs_series_check(a_pk: Sequence[CyclotomicNumber]) -> bool:
    """Check sum_k |a_{p^k}|^2 X^k * (1-X)^2 (1 - tX + X^2) = 1 - X^2 to the known order.

    t = |a_p|^2 - 2 is the trace of alpha_1/alpha_2; the identity is the local
    statement L_p(f x f*) = zeta_p L_p(Ad) with the zeta_p(2s) factor removed.
    """
    m = a_pk[0].m
    series = [a * a.conjugate() for a in a_pk]
    t = series[1] - 2
    one = CyclotomicNumber.rational(m, 1)
    factor = _poly_mul(_poly_mul([one, -one], [one, -one]), [one, -t, one])
    product = _poly_mul(series, factor)[: len(series)]
    target = [one, CyclotomicNumber.zero(m), -one] + [CyclotomicNumber.zero(m)] * len(series)
    return all(product[k] == target[k] for k in range(len(series)))


def bad_prime_factor(b_powers: Dict[int, object], euler_poly: Sequence, tol) -> Dict:
    """Reconstruct C_p(X) from b_{p^j}, j >= -1.

    A(X) = sum_j b_{p^j} X^(j+1) is multiplied by (1-X) P_Ad(X) and divided by
    1 - X^2; the quotient must terminate within the known range.
    """
    j_max = max(b_powers)
    a_series = [mp.mpf(b_powers.get(j, 0)) for j in range(-1, j_max + 1)]
    poly = [mp.mpc(c) for c in euler_poly]
    one_minus_x = [mp.mpf(1), mp.mpf(-1)]
    factor = [mp.mpc(0)] * (len(poly) + 1)
    for i, a in enumerate(poly):
        for j, b in enumerate(one_minus_x):
            factor[i + j] += a * b
    n = len(a_series)
    w = [mp.mpc(0)] * n
    for i, a in enumerate(a_series):
        for j, b in enumerate(factor):
            if i + j < n:
                w[i + j] += a * b
    q = []
    for k in range(n):
        q.append(w[k] + (q[k - 2] if k >= 2 else 0))
    terminated = all(abs(c) < tol for c in q[-2:]) if n >= 3 else False
    value = mp.fsum(q)
    return {"Q": q, "terminated": terminated, "C_p_at_0": value}


@dataclass
class CrsResult:
    measured: object
    recognized: Optional[Fraction]
    unramified: Dict[int, bool] = field(default_factory=dict)
    bad_primes: Dict[int, Dict] = field(default_factory=dict)
    predicted: object = None
    error: str = ""

    def prediction_agrees(self, tol) -> Optional[bool]:
        """Whether the product of bad local factors reproduces the measured c_RS; None without one."""
        if self.predicted is None:
            return None
        return bool(abs(self.predicted - self.measured) <= tol * max(1, abs(self.measured)))


def crs_compute(f, disc: Discriminant, xi: RingClassChar, petersson_value, adjoint: AdjointLData,
                b_coefficients=None, unramified_primes: Sequence[int] = (2, 3),
                height: int = 10**4, tol=mp.mpf("1e-5"), alternates: Sequence = ()) -> CrsResult:
    """c_RS = ||f||^2 / L'(Ad, 0) with the local factor checks around it.

    ``alternates`` are Petersson norms from independent routes; the rational
    must be the same for every one of them.
    """
    measured = petersson_value / adjoint.value()
    try:
        recognized = recognize_stable_rational([measured] + [v / adjoint.value() for v in alternates],
                                               height, tol)
    except RecognitionError as e:
        log.warning(f"c_RS left unresolved: {e}")
        recognized = None
    result = CrsResult(measured=measured, recognized=recognized)

    symbolic = localrs.unramified_factor_identity()
    for p in unramified_primes:
        if f.level % p == 0:
            continue
        k_max = 1
        while p ** (k_max + 1) <= f.bound and k_max < 8:
            k_max += 1
        a_pk = [f.coefficient(p ** k) for k in range(k_max + 1)]
        result.unramified[p] = symbolic and unramified_rs_series_check(a_pk)

    predicted = mp.mpf(1)
    if b_coefficients is not None:
        for p in factorint(f.level):
            b_powers = {}
            j = -1
            while True:
                r = Fraction(p) ** j
                if not b_coefficients.has(r):
                    break
                b_powers[j] = b_coefficients.get(r)
                j += 1
            if len(b_powers) < 2:
                result.error = f"not enough b-coefficients at p={p}"
                continue
            euler = [c.embed(1) for c in adjoint_euler_factor(disc, xi, p)]
            local = bad_prime_factor(b_powers, euler, tol)
            result.bad_primes[p] = local
            predicted *= mp.re(local["C_p_at_0"])
        if result.error:
            log.warning(f"c_RS local prediction incomplete: {result.error}")
        else:
            result.predicted = predicted
    return result
