"""Weight one theta series of imaginary quadratic orders.

f = theta_chi has a_n = (1/w) sum_A chi(A) r_A(n), where r_A counts
representations of n by the reduced form of the class A and w is the number
of units of the order. Coefficients are exact elements of Z[zeta_m].
"""
from dataclasses import dataclass, field
from fractions import Fraction
import math
from math import ceil, pi
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath as mp
import numpy as np
from sympy import isprime

from config.logging_config import log
from src.core.cyclotomic import CyclotomicNumber
from src.core.errors import DomainError, InputError, ResolutionError, TruncationError
from src.core.modfunc import reduce_to_fundamental_domain
from src.core.qorders import (
    ClassGroup,
    Discriminant,
    RingClassChar,
    class_group,
    kronecker,
    order_invariants,
    prime_form,
    representation_counts,
)

GUARD_BITS = 16
DOUBLE_TAIL = 40.0
FALLBACK_PREC = 80

Matrix = Tuple[int, int, int, int]


@dataclass
class QExpansion:
    """q-expansion sum_{n<=B} a_n q^n with a_n in Z[zeta_m]."""

    coeffs: List[CyclotomicNumber]
    m: int
    level: int
    d: int
    bound: int
    label: str = ""
    _numeric: Dict = field(default_factory=dict, repr=False, compare=False)
    _fricke: Dict = field(default_factory=dict, repr=False, compare=False)

    def coefficient(self, n: int) -> CyclotomicNumber:
        if n < 1 or n > self.bound:
            raise InputError(f"coefficient index {n} outside 1..{self.bound}")
        return self.coeffs[n]

    def nebentypus(self, n: int) -> int:
        return kronecker(self.d, n)

    def is_real(self) -> bool:
        return all(a == a.conjugate() for a in self.coeffs[1:])

    def numeric(self, embedding: int = 1, prec: int = 53) -> List:
        """a_0..a_B under zeta_m -> exp(2 pi i j/m), cached per embedding and precision."""
        key = (embedding, prec)
        if key not in self._numeric:
            with mp.workprec(prec + GUARD_BITS):
                self._numeric[key] = [mp.mpc(0)] + [a.embed(embedding) for a in self.coeffs[1:]]
        return self._numeric[key]

    def numeric_array(self, embedding: int = 1) -> np.ndarray:
        return np.array([complex(v) for v in self.numeric(embedding, 53)], dtype=np.complex128)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "level": self.level,
            "d": self.d,
            "bound": self.bound,
            "label": self.label,
            "coeffs": [a.to_json() for a in self.coeffs[1:]],
        }

    @classmethod
    def from_json(cls, data: dict) -> "QExpansion":
        m = data["m"]
        coeffs = [CyclotomicNumber.zero(m)] + [CyclotomicNumber.from_json(m, c) for c in data["coeffs"]]
        return cls(coeffs=coeffs, m=m, level=data["level"], d=data["d"], bound=data["bound"],
                   label=data.get("label", ""))


def theta_qexp(disc: Discriminant, chi: RingClassChar, B: int,
               cg: Optional[ClassGroup] = None) -> QExpansion:
    """q-expansion of theta_chi up to q^B."""
    if B <= 0:
        raise InputError(f"coefficient bound must be positive, got {B}")
    cg = cg or class_group(disc)
    if len(chi.exponents) != cg.order:
        raise InputError("character does not belong to this class group")
    w = order_invariants(disc, cg=cg).w_order
    m = chi.m
    counts = [[0] * m for _ in range(B + 1)]
    for i, form in enumerate(cg.forms):
        k = chi.exponent(i)
        for n, r in representation_counts(form, B).items():
            counts[n][k] += r
    coeffs = [CyclotomicNumber.zero(m)]
    for n in range(1, B + 1):
        coeffs.append(CyclotomicNumber.from_group_ring(m, counts[n]) / w)
    f = QExpansion(coeffs=coeffs, m=m, level=disc.level, d=disc.d, bound=B,
                   label=f"theta[{disc.D}; {chi.exponents}/{m}]")
    if f.coeffs[1] != 1:
        raise DomainError(f"a_1 = {f.coeffs[1]!r}, expected 1")
    log.info(f"Theta series {f.label}: level {f.level}, {B} coefficients")
    return f


def dual_form(f: QExpansion) -> QExpansion:
    """f* = sum conj(a_n) q^n."""
    return QExpansion(coeffs=[a.conjugate() for a in f.coeffs], m=f.m, level=f.level, d=f.d,
                      bound=f.bound, label=f"{f.label}*" if not f.label.endswith("*") else f.label[:-1])


def _direct_terms(f: QExpansion, y, prec: int) -> int:
    """Number of terms for a tail below 2^-prec at height y, or 0 if B is too small."""
    y = float(y)
    if y <= 0:
        return 0
    need = ((prec + GUARD_BITS) * math.log(2) + 2 * math.log(f.bound + 1) + 5) / (2 * pi * y)
    n = int(ceil(need)) + 1
    return n if n <= f.bound else 0


def _direct(f: QExpansion, z, prec: int, embedding: int, conjugate: bool = False):
    n_terms = _direct_terms(f, mp.im(z), prec)
    if not n_terms:
        raise TruncationError(f"B={f.bound} too small for Im z = {mp.nstr(mp.im(z), 5)}",
                              achieved=float(mp.im(z)))
    coeffs = f.numeric(embedding, prec)
    q = mp.expjpi(2 * z)
    total = mp.mpc(0)
    for n in range(n_terms, 0, -1):
        a = mp.conj(coeffs[n]) if conjugate else coeffs[n]
        total = (total + a) * q
    return total


def fricke_constant(f: QExpansion, prec: int = 256, embedding: int = 1):
    """lambda with f(-1/(N z)) = lambda N^(1/2) z f*(z), measured at z0 = 0.1 + i/sqrt(N)."""
    key = (embedding, prec)
    if key not in f._fricke:
        N = f.level
        with mp.workprec(prec + GUARD_BITS):
            z0 = mp.mpc(mp.mpf(1) / 10, 1 / mp.sqrt(N))
            lhs = _direct(f, -1 / (N * z0), prec, embedding)
            rhs = mp.sqrt(N) * z0 * _direct(f, z0, prec, embedding, conjugate=True)
            lam = lhs / rhs
        if abs(abs(lam) - 1) > 1e-6:
            log.warning(f"Fricke constant for {f.label} has modulus {mp.nstr(abs(lam), 10)}")
        f._fricke[key] = lam
    return f._fricke[key]


def _fricke_route(gamma: Matrix, N: int) -> Tuple[str, Matrix, int]:
    """Split gamma = delta S T^k with delta in Gamma_0(N), or report gamma in Gamma_0(N)."""
    a, b, c, d = gamma
    if c % N == 0:
        return "level", gamma, 0
    k = d * pow(c, -1, N) % N
    return "fricke", (a * k - b, a, c * k - d, c), k


def eval_form(f: QExpansion, z, prec: int = 256, embedding: int = 1, conjugate: bool = False):
    """f(z) to prec bits; near the cusps of a prime level the Fricke relation is used."""
    with mp.workprec(prec + GUARD_BITS):
        z = mp.mpc(z)
        if mp.im(z) <= 0:
            raise DomainError("Im z must be positive")
        if _direct_terms(f, mp.im(z), prec):
            return _direct(f, z, prec, embedding, conjugate)
        N = f.level
        if not isprime(N):
            raise TruncationError(f"B={f.bound} too small at Im z = {mp.nstr(mp.im(z), 5)} and level {N} is not prime",
                                  achieved=float(mp.im(z)))
        w_f, (a, b, c, d) = reduce_to_fundamental_domain(z)
        gamma = (d, -b, -c, a)
        route, delta, k = _fricke_route(gamma, N)
        _, _, cd, dd = delta
        char = f.nebentypus(dd)
        if route == "level":
            return char * (cd * w_f + dd) * _direct(f, w_f, prec, embedding, conjugate)
        v = w_f + k
        u = -1 / v
        lam = fricke_constant(f, prec, embedding)
        if conjugate:
            # f*(-1/(Nz)) = -conj(lambda) N^(1/2) z f(z)
            lam = -mp.conj(lam)
        inner = lam * v / mp.sqrt(N) * _direct(f, v / N, prec, embedding, not conjugate)
        return char * (cd * u + dd) * inner


def _reduce_float(z: complex) -> Tuple[complex, Matrix]:
    a, b, c, d = 1, 0, 0, 1
    for _ in range(1000):
        n = round(z.real)
        if n:
            z -= n
            a, b = a - n * c, b - n * d
        if abs(z) < 1 - 1e-12:
            z = -1 / z
            a, b, c, d = -c, -d, a, b
        else:
            break
    return z, (a, b, c, d)


def eval_form_numpy(f: QExpansion, zs, embedding: int = 1, conjugate: bool = False,
                    chunk: int = 2048) -> np.ndarray:
    """Double precision evaluation of f at many points, same routing as ``eval_form``."""
    zs = np.asarray(zs, dtype=np.complex128).ravel()
    coeffs = f.numeric_array(embedding)
    N = f.level
    prime = isprime(N)
    lam = complex(fricke_constant(f, 64, embedding)) if prime else 1.0
    if conjugate:
        lam = -lam.conjugate()
    points = {False: [], True: []}
    owners = {False: [], True: []}
    mult = np.zeros(len(zs), dtype=np.complex128)
    for idx, z in enumerate(zs):
        z = complex(z)
        if z.imag <= 0:
            raise DomainError("Im z must be positive")
        direct_ok = 2 * pi * f.bound * z.imag > DOUBLE_TAIL
        if direct_ok and (z.imag > 0.3 or not prime):
            points[conjugate].append(z)
            owners[conjugate].append(idx)
            mult[idx] = 1.0
            continue
        if not prime:
            raise TruncationError(f"level {N} is not prime; cannot evaluate at Im z = {z.imag:.3g}",
                                  achieved=z.imag)
        w_f, (a, b, c, d) = _reduce_float(z)
        route, delta, k = _fricke_route((d, -b, -c, a), N)
        _, _, cd, dd = delta
        char = f.nebentypus(dd)
        if route == "level":
            points[conjugate].append(w_f)
            owners[conjugate].append(idx)
            mult[idx] = char * (cd * w_f + dd)
        else:
            v = w_f + k
            u = -1 / v
            points[not conjugate].append(v / N)
            owners[not conjugate].append(idx)
            mult[idx] = char * (cd * u + dd) * lam * v / np.sqrt(N)
    out = np.zeros(len(zs), dtype=np.complex128)
    for conj_flag in (False, True):
        pts = np.array(points[conj_flag], dtype=np.complex128)
        if not len(pts):
            continue
        y_min = pts.imag.min()
        n_terms = min(f.bound, int(ceil(DOUBLE_TAIL / (2 * pi * y_min))) + 1)
        if 2 * pi * y_min * f.bound < DOUBLE_TAIL:
            raise TruncationError(f"B={f.bound} too small for Im = {y_min:.3g}", achieved=float(y_min))
        a = coeffs[1:n_terms + 1]
        if conj_flag:
            a = np.conj(a)
        n = np.arange(1, n_terms + 1)
        vals = np.empty(len(pts), dtype=np.complex128)
        for start in range(0, len(pts), chunk):
            block = pts[start:start + chunk]
            vals[start:start + chunk] = np.exp(2j * np.pi * np.outer(block, n)) @ a
        out[np.array(owners[conj_flag])] = vals
    return out * mult


def slash(f: QExpansion, gamma: Matrix, tau, prec: int = 256, embedding: int = 1):
    """(f|gamma)(tau) = (c tau + d)^-1 f(gamma tau)."""
    a, b, c, d = gamma
    with mp.workprec(prec + GUARD_BITS):
        tau = mp.mpc(tau)
        return eval_form(f, (a * tau + b) / (c * tau + d), prec, embedding) / (c * tau + d)


def coset_qexp_numeric(f: QExpansion, gamma: Matrix, h: int, n_max: int, y0, prec: int = 64,
                       embedding: int = 1) -> List:
    """Coefficients a_{gamma,n}, n = 0..n_max, of f|gamma = sum a_{gamma,n} e^(2 pi i n tau/h).

    Sampled on tau = x + i y0 over one period of width h and inverted by a
    discrete Fourier transform; negative frequencies must sit on the noise floor.
    """
    y0 = mp.mpf(y0)
    # frequencies above n_max alias into the negative slots; keep them under e^-DOUBLE_TAIL
    n_points = max(2 * n_max + 1, n_max + int(ceil(DOUBLE_TAIL * h / (2 * pi * float(y0)))))
    with mp.workprec(prec + GUARD_BITS):
        if prec <= 53:
            a, b, c, d = gamma
            taus = np.arange(n_points) * (h / n_points) + 1j * float(y0)
            images = (a * taus + b) / (c * taus + d)
            samples = eval_form_numpy(f, images, embedding) / (c * taus + d)
            raw = [mp.mpc(v) for v in np.fft.fft(samples) / n_points]
            noise_tol = mp.mpf(2) ** -40
        else:
            samples = [slash(f, gamma, mp.mpc(mp.mpf(h) * k / n_points, y0), prec, embedding)
                       for k in range(n_points)]
            roots = [mp.expjpi(-mp.mpf(2 * k) / n_points) for k in range(n_points)]
            raw = []
            for n in list(range(n_max + 1)) + list(range(n_points - n_max, n_points)):
                total = mp.fsum(s * roots[(n * k) % n_points] for k, s in enumerate(samples))
                raw.append(total / n_points)
            raw = raw[:n_max + 1] + [mp.mpc(0)] * (n_points - 2 * n_max - 1) + raw[n_max + 1:]
            noise_tol = mp.mpf(2) ** (-prec // 2)
        scale = max(abs(v) for v in raw) or 1
        for n in range(1, n_max + 1):
            if abs(raw[n_points - n]) > noise_tol * scale:
                if prec <= 53:
                    # double samples lose accuracy where gamma maps the line close to the real axis
                    log.warning(f"coset {gamma}: double precision DFT noisy at frequency {-n}, "
                                f"resampling at {FALLBACK_PREC} bits")
                    return coset_qexp_numeric(f, gamma, h, n_max, y0, FALLBACK_PREC, embedding)
                raise ResolutionError(f"negative frequency {-n} above noise floor for coset {gamma}")
        return [raw[n] * mp.exp(2 * mp.pi * n * y0 / h) for n in range(n_max + 1)]


@dataclass
class CosetCoefficients:
    """b_r = sum over cosets of |a_{gamma,n}|^2 indexed by r = n/h."""

    values: Dict[Fraction, object]
    r_max: int
    y0: object = None

    def has(self, r) -> bool:
        return Fraction(r) in self.values

    def get(self, r):
        return self.values.get(Fraction(r), mp.mpf(0))

    def items(self):
        return sorted(self.values.items())


def default_sampling(r_max: int) -> float:
    """Sampling height with e^(2 pi r y0) <= 1e6 over the requested range."""
    return min(1.5, math.log(1e6) / (2 * pi * r_max))


def b_coefficients(f: QExpansion, r_max: int = 8, y0=None, prec: int = 53, embedding: int = 1,
                   cosets=None) -> CosetCoefficients:
    """b_r for r <= r_max from one DFT per cusp class of Gamma_0(N)."""
    from src.core.petersson import coset_reps

    cosets = cosets or coset_reps(f.level)
    if y0 is None:
        y0 = default_sampling(r_max)
    values: Dict[Fraction, object] = {}
    numeric = f.numeric(embedding, max(prec, 53))
    for gamma, width in cosets.cusp_classes():
        if gamma[2] % f.level == 0:
            for n in range(1, min(r_max, f.bound) + 1):
                values[Fraction(n)] = values.get(Fraction(n), 0) + abs(numeric[n]) ** 2
            continue
        n_max = r_max * width
        coeffs = coset_qexp_numeric(f, gamma, width, n_max, y0, prec, embedding)
        for n in range(1, n_max + 1):
            r = Fraction(n, width)
            values[r] = values.get(r, 0) + width * abs(coeffs[n]) ** 2
    log.info(f"b-coefficients for {f.label}: {len(values)} exponents up to r={r_max}, y0={float(y0):.4f}")
    return CosetCoefficients(values=values, r_max=r_max, y0=y0)


def hecke_check(f: QExpansion, disc: Discriminant, chi: RingClassChar, p: int,
                cg: Optional[ClassGroup] = None) -> Dict[str, bool]:
    """a_p against chi on the primes above p, and the Hecke recursion in powers of p."""
    if f.level % p == 0:
        raise InputError(f"{p} divides the level {f.level}")
    cg = cg or class_group(disc)
    result: Dict[str, bool] = {}
    eta = kronecker(disc.d, p)
    if eta == 1:
        pf = prime_form(disc.D, p)
        i, j = cg.class_of(pf), cg.class_of(pf.inverse())
        result["a_p"] = f.coefficient(p) == chi.value(i) + chi.value(j)
    else:
        result["a_p"] = f.coefficient(p).is_zero()
    recursion = True
    k = 1
    while p ** (k + 1) <= f.bound:
        lhs = f.coefficient(p ** (k + 1))
        prev = f.coefficient(p ** (k - 1)) if k > 1 else CyclotomicNumber.rational(f.m, 1)
        rhs = f.coefficient(p) * f.coefficient(p ** k) - prev * eta
        recursion = recursion and lhs == rhs
        k += 1
    result["recursion"] = recursion
    return result
