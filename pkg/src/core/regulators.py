"""Archimedean and mod-p regulators of unit vectors.

reg_R takes the weighted logarithmic embedding at the distinguished complex
place. reg_Fp reduces the base values modulo a prime above p, takes the
residue-field norm to F_p^x and records discrete logarithms against a fixed
primitive root, so that classes in F_p^x (x) Z[zeta_m] become vectors mod p-1.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath as mp
from sympy import factorint, primitive_root

from config.logging_config import log
from src.core.cyclotomic import CyclotomicNumber, embeddings
from src.core.errors import (
    DomainError,
    InputError,
    RamifiedPrimeError,
    RecognitionError,
)
from src.core.finite_field import (
    QuadraticExtension,
    Poly,
    ResidueField,
    discrete_log_bsgs,
    factor_mod_p,
)
from src.core.qorders import ClassGroup, RingClassChar, class_group, order_invariants
from src.core.units import GUARD_BITS, MinimalPolynomial, UnitVector

# (2 Re, 2 Im / sqrt|d|) of an element of O_K
HalfIntegral = Tuple[int, int]


def reg_R(u: UnitVector, embedding: int = 1):
    """scalar * sum_sigma weight_sigma log|v_sigma| under zeta_m -> exp(2 pi i j/m)."""
    with mp.workprec(u.prec + GUARD_BITS):
        total = mp.mpc(0)
        for weight, value in zip(u.weights, u.base):
            if value == 0:
                raise DomainError("zero base value in a unit vector")
            if not weight.is_zero():
                total += weight.embed(embedding) * mp.log(abs(value))
        total *= u.scalar.embed(embedding)
        if abs(mp.im(total)) > mp.mpf(2) ** (-u.prec // 4) * max(1, abs(total)):
            log.warning(f"reg_R has imaginary part {mp.nstr(mp.im(total), 5)}")
        return mp.re(total)


def reduced_modulus(p: int, level: int) -> int:
    """Largest divisor of p - 1 coprime to 6N."""
    modulus = p - 1
    for ell in factorint(6 * level):
        while modulus % ell == 0:
            modulus //= ell
    return modulus


@dataclass
class FpUnitClass:
    """A class in F_p^x (x) Z[zeta_m], as discrete logs against ``generator``."""

    p: int
    m: int
    generator: int
    value: CyclotomicNumber
    modulus: int
    cleared: int = 1
    notes: Dict[str, object] = field(default_factory=dict)

    @property
    def dlog(self) -> Tuple[int, ...]:
        return self.value.reduce_mod(self.p - 1)

    @property
    def reduced(self) -> Tuple[int, ...]:
        """Coordinates after inverting 6N."""
        return self.value.reduce_mod(self.modulus)

    def is_torsion(self) -> bool:
        return not any(self.reduced)

    def __add__(self, other: "FpUnitClass") -> "FpUnitClass":
        self._check_compatible(other)
        return FpUnitClass(self.p, self.m, self.generator, self.value + other.value,
                           self.modulus, self.cleared)

    def scaled(self, factor) -> "FpUnitClass":
        """Multiply by an element of Q(zeta_m) whose denominators are prime to 6N."""
        factor = factor if isinstance(factor, CyclotomicNumber) else CyclotomicNumber.rational(self.m, factor)
        for c in factor.coeffs:
            if self.modulus > 1 and gcd(c.denominator, self.modulus) != 1:
                raise InputError(f"denominator {c.denominator} is not invertible mod {self.modulus}")
        return FpUnitClass(self.p, self.m, self.generator, self.value * factor,
                           self.modulus, self.cleared, dict(self.notes))

    def _check_compatible(self, other: "FpUnitClass"):
        if (self.p, self.m, self.generator, self.cleared) != (other.p, other.m, other.generator, other.cleared):
            raise InputError("classes live in different targets")

    def same_orbit(self, other: "FpUnitClass") -> bool:
        """Equal up to zeta_m^k and a relabelling zeta_m -> zeta_m^j, after inverting 6N."""
        self._check_compatible(other)
        target = other.reduced
        for j in embeddings(self.m):
            conj = self.value.galois(j)
            for k in range(self.m):
                shifted = conj * CyclotomicNumber.root_of_unity(self.m, k)
                if shifted.reduce_mod(self.modulus) == target:
                    return True
        return False

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "m": self.m,
            "generator": self.generator,
            "dlog": list(self.dlog),
            "modulus": self.modulus,
            "reduced": list(self.reduced),
            "cleared": self.cleared,
            "torsion": self.is_torsion(),
            **self.notes,
        }


def galois_polynomials(minpoly: MinimalPolynomial, values: Sequence, d: int, cg: ClassGroup,
                       prec: int) -> Dict[int, List[HalfIntegral]]:
    """R_sigma over O_K with R_sigma(G_tau) = P'(G_tau) G_(sigma tau), G = kappa * value."""
    h = len(values)
    kappa = mp.mpf(minpoly.kappa.numerator) / minpoly.kappa.denominator
    deriv = minpoly.derivative()
    tol = mp.mpf(2) ** (-prec // 4)
    with mp.workprec(prec + GUARD_BITS):
        roots = [kappa * mp.mpc(v) for v in values]
        vander = mp.matrix(h, h)
        for t in range(h):
            for k in range(h):
                vander[t, k] = roots[t] ** k
        sqrt_abs_d = mp.sqrt(abs(d))
        out: Dict[int, List[HalfIntegral]] = {}
        for sigma in range(h):
            rhs = mp.matrix(h, 1)
            for t in range(h):
                dp = mp.fsum(c * roots[t] ** k for k, c in enumerate(deriv))
                rhs[t] = dp * roots[cg.compose(sigma, t)]
            sol = mp.lu_solve(vander, rhs)
            coeffs = []
            for k in range(h):
                re2, im2 = 2 * mp.re(sol[k]), 2 * mp.im(sol[k]) / sqrt_abs_d
                a, b = int(mp.nint(re2)), int(mp.nint(im2))
                scale = max(1, abs(re2), abs(im2))
                if abs(re2 - a) > tol * scale or abs(im2 - b) > tol * scale:
                    raise RecognitionError(f"Galois polynomial for class {sigma} is not over O_K")
                coeffs.append((a, b))
            out[sigma] = coeffs
    return out


def _reduction_field(p: int, phi, d: int, sign: int):
    """Residue field containing a root of phi and sqrt(d), with the root and sqrt(d)."""
    base = ResidueField(p, phi)
    root = base.generator()
    dd = base.element(d)
    if base.is_square(dd):
        s = base.sqrt(dd)
        return base, root, (s if sign > 0 else base.neg(s))
    ext = QuadraticExtension(base, d)
    s = ext.sqrt_d()
    return ext, ext.embed(root), (s if sign > 0 else ext.neg(s))


def _eval_half_integral(F, coeffs: Sequence[HalfIntegral], root, sqrt_d, half):
    total = F.zero()
    power = F.one()
    for a, b in coeffs:
        term = F.add(F.element(a), F.mul(F.element(b), sqrt_d))
        total = F.add(total, F.mul(term, power))
        power = F.mul(power, root)
    return F.mul(total, half)


def _check_unramified(p: int, level: int):
    # H_c / Q ramifies only at primes dividing dc, and those divide N
    if p < 5 or level % p == 0:
        raise InputError(f"p={p} must be a prime coprime to 6N")


def simple_factors(minpoly: MinimalPolynomial, p: int) -> List[Poly]:
    """Irreducible factors of the minimal polynomial mod p that occur once.

    A simple factor gives a prime above p at which P'(root) is a unit, even
    when p divides the index of Z[root] and hence disc(P).
    """
    factors = factor_mod_p(minpoly.coeffs, p)
    simple = [phi for phi, e in factors if e == 1]
    if not simple:
        raise RamifiedPrimeError(f"every factor of the minimal polynomial mod {p} is repeated")
    if minpoly.discriminant() % p == 0:
        log.debug(f"p={p} divides disc(P); using {len(simple)} simple factor(s) of {len(factors)}")
    return simple


def reduce_conjugates(u: UnitVector, p: int, cg: Optional[ClassGroup] = None,
                      factor_index: int = 0, sign: int = 1,
                      galois: Optional[Dict[int, List[HalfIntegral]]] = None) -> List[int]:
    """Norms to F_p^x of the base values reduced at one prime above p.

    The prime is picked by a simple irreducible factor of the minimal polynomial mod p
    and a sign for sqrt(d). The root is labelled as the identity class, so the
    output is indexed up to translation by an unknown class.
    """
    if u.minpoly is None:
        raise RecognitionError("reg_Fp needs a recognised minimal polynomial")
    disc = u.disc
    cg = cg or class_group(disc)
    _check_unramified(p, disc.level)
    galois = galois or galois_polynomials(u.minpoly, u.base, disc.d, cg, u.prec)
    factors = simple_factors(u.minpoly, p)
    phi = factors[factor_index % len(factors)]
    F, root, sqrt_d = _reduction_field(p, phi, disc.d, sign)
    half = F.element(pow(2, -1, p))
    deriv = F.zero()
    power = F.one()
    for c in u.minpoly.derivative():
        deriv = F.add(deriv, F.mul(F.element(c), power))
        power = F.mul(power, root)
    if F.is_zero(deriv):
        raise RamifiedPrimeError(f"P'(root) vanishes mod {p}")
    inv_deriv = F.inv(deriv)
    kappa = u.minpoly.kappa
    inv_kappa = F.element(kappa.denominator * pow(kappa.numerator, -1, p))
    norms = []
    for sigma in range(cg.order):
        g = F.mul(_eval_half_integral(F, galois[sigma], root, sqrt_d, half), inv_deriv)
        norms.append(F.norm_to_prime_field(F.mul(g, inv_kappa)))
    return norms


def reg_Fp(u: UnitVector, p: int, cg: Optional[ClassGroup] = None, factor_index: int = 0,
           sign: int = 1, galois: Optional[Dict[int, List[HalfIntegral]]] = None) -> FpUnitClass:
    """Class of u in F_p^x (x) Z[zeta_m] at one prime above p."""
    disc = u.disc
    if disc.c == 1:
        raise InputError("reg_Fp needs c > 1: base values for c = 1 are not units")
    cg = cg or class_group(disc)
    norms = reduce_conjugates(u, p, cg, factor_index, sign, galois)
    g = int(primitive_root(p))
    total = CyclotomicNumber.zero(u.m)
    for weight, n in zip(u.weights, norms):
        if n == 0:
            raise RamifiedPrimeError(f"a base value reduces to 0 mod {p}")
        total = total + weight * discrete_log_bsgs(n, g, p)
    modulus = reduced_modulus(p, disc.level)
    cleared = 1
    scalar = u.scalar
    for c in scalar.coeffs:
        if gcd(c.denominator, modulus) != 1:
            cleared = cleared * c.denominator // gcd(cleared, c.denominator)
    if cleared > 1:
        scalar = scalar * cleared
        log.warning(f"Cleared denominator {cleared} before reduction mod {p}")
    value = total * scalar
    log.debug(f"reg_Fp p={p} factor={factor_index} sign={sign}: {value.reduce_mod(modulus)}")
    return FpUnitClass(p=p, m=u.m, generator=g, value=value, modulus=modulus, cleared=cleared,
                       notes={"factor_index": factor_index, "sqrt_d_sign": sign})


def reg_Fp_all_primes(u: UnitVector, p: int, cg: Optional[ClassGroup] = None) -> List[FpUnitClass]:
    """reg_Fp at every (factor, sqrt(d) sign) choice of a prime above p."""
    cg = cg or class_group(u.disc)
    galois = galois_polynomials(u.minpoly, u.base, u.disc.d, cg, u.prec)
    n_factors = len(simple_factors(u.minpoly, p))
    return [reg_Fp(u, p, cg, i, s, galois) for i in range(n_factors) for s in (1, -1)]


def stark_Fp_rhs(u_stark: UnitVector, p: int, cg: Optional[ClassGroup] = None) -> FpUnitClass:
    """-([H_c:H_1] w_K / 2) Reg_Fp(u_Stark)."""
    if u_stark.kind != "u_stark":
        raise InputError("stark_Fp_rhs expects u_Stark")
    inv = order_invariants(u_stark.disc, cg=cg)
    return reg_Fp(u_stark, p, cg).scaled(Fraction(-inv.index_Hc_H1 * inv.w_K, 2))
