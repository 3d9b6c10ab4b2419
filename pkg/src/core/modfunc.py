"""Arbitrary precision modular functions.

Dedekind eta and the discriminant Delta, Siegel functions, the completed
real-analytic Eisenstein series E(z, s) = zeta*(2s) E_0(z, s) and its Laurent
data at s = 0, and the invariant norm ||Delta||(tau) = y^6 |Delta(tau)|.

All functions take an explicit ``prec`` in bits and evaluate inside
``mpmath.workprec`` with a small guard.
"""
from dataclasses import dataclass, field
from math import ceil, gcd, log2
from typing import Callable, Dict, Iterable, Optional, Tuple

import mpmath as mp
from sympy import divisors

from config.logging_config import log
from src.core.errors import DomainError, InputError, PoleError, PrecisionError
from src.core.qorders import mobius

GUARD_BITS = 16

Matrix = Tuple[int, int, int, int]


def apply_matrix(g: Matrix, tau):
    a, b, c, d = g
    return (a * tau + b) / (c * tau + d)


def reduce_to_fundamental_domain(tau) -> Tuple[object, Matrix]:
    """Return (tau_F, g) with tau_F = g(tau) in the standard fundamental domain."""
    if mp.im(tau) <= 0:
        raise DomainError(f"Im(tau) must be positive, got {mp.nstr(tau, 10)}")
    a, b, c, d = 1, 0, 0, 1
    for _ in range(10_000):
        n = int(mp.nint(mp.re(tau)))
        if n:
            tau -= n
            a, b = a - n * c, b - n * d
        if abs(tau) < 1 - mp.mpf(2) ** (-mp.mp.prec + 8):
            tau = -1 / tau
            a, b, c, d = -c, -d, a, b
        else:
            break
    else:
        raise PrecisionError("fundamental domain reduction did not terminate")
    return tau, (a, b, c, d)


def _q(tau):
    return mp.expjpi(2 * tau)


def delta_eval(tau, prec: int = 256):
    """Delta(tau) = q prod (1 - q^n)^24, evaluated after reduction to F."""
    with mp.workprec(prec + GUARD_BITS):
        tau = mp.mpc(tau)
        tau_f, (_, _, c, d) = reduce_to_fundamental_domain(tau)
        q = _q(tau_f)
        value = q * mp.qp(q) ** 24
        return value / (c * tau + d) ** 12


def eta_eval(tau, prec: int = 256):
    """Dedekind eta by direct q-product; tau should already be in a good region."""
    with mp.workprec(prec + GUARD_BITS):
        tau = mp.mpc(tau)
        if mp.im(tau) <= 0:
            raise DomainError("Im(tau) must be positive")
        return mp.expjpi(tau / 12) * mp.qp(_q(tau))


def log_delta_norm(tau, k: int = 6, prec: int = 256):
    """log(y^k |Delta(tau)|); only k = 6 is SL2(Z)-invariant."""
    if k not in (1, 6):
        raise InputError(f"exponent k must be 1 or 6, got {k}")
    with mp.workprec(prec + GUARD_BITS):
        tau = mp.mpc(tau)
        tau_f, (_, _, c, d) = reduce_to_fundamental_domain(tau)
        y = mp.im(tau)
        q = _q(tau_f)
        # log|Delta(tau_F)| = -2 pi Im(tau_F) + 24 log|(q;q)|, then undo the cocycle.
        log_abs = -2 * mp.pi * mp.im(tau_f) + 24 * mp.log(abs(mp.qp(q)))
        log_abs -= 12 * mp.log(abs(c * tau + d))
        return k * mp.log(y) + log_abs


def siegel_g(u, v, tau, prec: int = 256):
    """Siegel function g_(u,v)(tau) in the Kubert-Lang normalisation.

    g = -q^(B2(u)/2) e^(pi i v (u-1)) (1 - zeta) prod_n (1 - q^n zeta)(1 - q^n / zeta)
    with zeta = exp(2 pi i (u tau + v)).
    """
    u, v = mp.mpf(u), mp.mpf(v)
    if u == int(u) and v == int(v):
        raise DomainError(f"siegel function undefined at integral (u, v) = ({u}, {v})")
    with mp.workprec(prec + GUARD_BITS):
        tau = mp.mpc(tau)
        if mp.im(tau) <= 0:
            raise DomainError("Im(tau) must be positive")
        q = _q(tau)
        zeta = mp.expjpi(2 * (u * tau + v))
        b2 = u * u - u + mp.mpf(1) / 6
        prefix = -mp.expjpi(tau * b2) * mp.expjpi(v * (u - 1))
        return prefix * (1 - zeta) * mp.qp(zeta * q, q) * mp.qp(q / zeta, q)


def siegel_norm_ratio(c: int, tau, prec: int = 256):
    """|prod_{n in (Z/c)^x} g(0, n/c, tau)^(12c)| / |prod_{f|c} Delta(f tau)^(c mu(c/f))|."""
    if c < 2:
        raise InputError("siegel norm ratio needs c >= 2")
    with mp.workprec(prec + GUARD_BITS):
        log_num = mp.mpf(0)
        for n in range(1, c):
            if gcd(n, c) == 1:
                log_num += 12 * c * mp.log(abs(siegel_g(0, mp.mpf(n) / c, tau, prec)))
        log_den = mp.mpf(0)
        for f in divisors(c):
            mu = mobius(c // f)
            if mu:
                log_den += c * mu * mp.log(abs(delta_eval(f * mp.mpc(tau), prec)))
        return mp.exp(log_num - log_den)


def completed_zeta(s):
    """zeta*(s) = pi^(-s/2) Gamma(s/2) zeta(s)."""
    return mp.power(mp.pi, -s / 2) * mp.gamma(s / 2) * mp.zeta(s)


def _divisor_power_sum(n: int, exponent):
    return mp.fsum(mp.power(dv, exponent) for dv in divisors(n))


def _eisenstein_raw(z, s):
    x, y = mp.re(z), mp.im(z)
    value = completed_zeta(2 * s) * mp.power(y, s) + completed_zeta(2 - 2 * s) * mp.power(y, 1 - s)
    nu = s - mp.mpf(1) / 2
    n_max = int(ceil((mp.mp.prec + 16) * mp.log(2) / (2 * mp.pi * y))) + 10
    tail = mp.mpc(0)
    for n in range(1, n_max + 1):
        tail += (mp.power(n, nu) * _divisor_power_sum(n, 1 - 2 * s)
                 * mp.besselk(nu, 2 * mp.pi * n * y) * mp.cos(2 * mp.pi * n * x))
    return value + 4 * mp.sqrt(y) * tail


def eisenstein_E(z, s, prec: int = 256):
    """Completed Eisenstein series E(z, s) via its Fourier-Bessel expansion."""
    with mp.workprec(prec + GUARD_BITS):
        z, s = mp.mpc(z), mp.mpc(s)
        if mp.im(z) <= 0:
            raise DomainError("Im(z) must be positive")
        eps = mp.mpf(2) ** (-prec + 8)
        if abs(s - 1) < eps:
            raise PoleError("E(z, s) has a pole at s = 1", residue=mp.mpf(1) / 2)
        if abs(s) < eps:
            raise PoleError("E(z, s) has a pole at s = 0", residue=-mp.mpf(1) / 2)
        z, _ = reduce_to_fundamental_domain(z)
        h = mp.mpf(2) ** (-prec // 3)
        if abs(s - mp.mpf(1) / 2) < h:
            # zeta*(2s) and zeta*(2-2s) have cancelling poles at s = 1/2.
            return (_eisenstein_raw(z, s + h) + _eisenstein_raw(z, s - h)) / 2
        return _eisenstein_raw(z, s)


def fit_laurent(func: Callable, radius, n_points: int, orders: Iterable[int], center=0) -> Dict[int, object]:
    """Laurent coefficients of ``func`` around ``center`` by the trapezoid rule on a circle."""
    radius = mp.mpf(radius)
    samples = []
    for k in range(n_points):
        w = mp.expjpi(mp.mpf(2 * k) / n_points)
        samples.append((radius * w, func(center + radius * w)))
    coeffs = {}
    for n in orders:
        total = mp.fsum(value * mp.power(offset, -n) for offset, value in samples)
        coeffs[n] = total / n_points
    return coeffs


@dataclass
class LaurentData:
    """Laurent coefficients E_n(z) of E(z, s) around s = center."""

    z: object
    center: object
    order: int
    coefficients: Dict[int, object] = field(default_factory=dict)
    radius: object = None

    def coefficient(self, n: int):
        return self.coefficients[n]


def laurent_at_s0(z, order: int = 1, prec: int = 256, radius=mp.mpf(1) / 8) -> LaurentData:
    """Fit the Laurent expansion of E(z, s) at s = 0 on two circles and cross-check."""
    radius = mp.mpf(radius)
    second = radius * 4 / 3
    n_points = int(ceil((prec + GUARD_BITS) / log2(1 / float(second)))) + 4
    orders = list(range(-1, order + 1))
    with mp.workprec(prec + GUARD_BITS):
        z = mp.mpc(z)

        def func(s):
            return eisenstein_E(z, s, prec)

        first_fit = fit_laurent(func, radius, n_points, orders)
        second_fit = fit_laurent(func, second, n_points, orders)
        tol = mp.mpf(2) ** (-prec // 2)
        for n in (-1, 0):
            scale = max(mp.mpf(1), abs(first_fit[n]))
            if abs(first_fit[n] - second_fit[n]) > tol * scale:
                log.warning(f"Laurent fit unstable at order {n} for z={mp.nstr(z, 8)}")
                raise PrecisionError(f"Laurent coefficient E_{n} unstable between radii")
        coefficients = {n: mp.re(c) if abs(mp.im(c)) < tol else c for n, c in first_fit.items()}
    return LaurentData(z=z, center=mp.mpf(0), order=order, coefficients=coefficients, radius=radius)


def delta_norm_exponent(z, prec: int = 256) -> Optional[int]:
    """The k in (1, 6) for which y^k |Delta| is invariant under tau -> -1/tau.

    z is first moved by an irrational translation so that it is not a fixed
    point of the inversion (points on |z| = 1 would accept every k).
    """
    with mp.workprec(prec + GUARD_BITS):
        w = mp.mpc(z) + mp.sqrt(2) / 10
        tol = mp.mpf(2) ** (-prec // 2)
        for k in (1, 6):
            if abs(log_delta_norm(w, k, prec) - log_delta_norm(-1 / w, k, prec)) < tol:
                return k
    return None


def kronecker_constant(z, prec: int = 256, k: int = 6):
    """E_0(z) + (1/12) log ||Delta||(z); independent of z."""
    data = laurent_at_s0(z, order=0, prec=prec)
    with mp.workprec(prec + GUARD_BITS):
        return data.coefficient(0) + log_delta_norm(z, k, prec) / 12


def kronecker_constant_exact(prec: int = 256):
    """The constant (gamma - log(4 pi)) / 2, i.e. the constant term of zeta*(w) at w = 0."""
    with mp.workprec(prec + GUARD_BITS):
        return (mp.euler - mp.log(4 * mp.pi)) / 2
