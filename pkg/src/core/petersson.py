"""Petersson norms on X_0(N), the Rankin-Selberg convolution and the classical pairing.

The quadrature integrates the coset trace sum_j |f(gamma_j z)|^2 Im(gamma_j z)
over the truncated standard fundamental domain. The Lambda route recovers the
same number from the b-coefficients through the theta kernel of the
Rankin-Selberg Mellin transform.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, log as flog, pi
from typing import Callable, Dict, List, Optional, Tuple

import mpmath as mp
import numpy as np
from numpy.polynomial.legendre import leggauss
from sympy import factorint
from sympy.core.intfunc import igcdex

from config.logging_config import log
from config.settings import get_settings
from src.core.cyclotomic import CyclotomicNumber
from src.core.errors import InputError, TruncationError
from src.core.modfunc import fit_laurent
from src.core.qorders import ClassGroup, Discriminant, RingClassChar, class_group
from src.core.thetaforms import CosetCoefficients, QExpansion, eval_form_numpy

GUARD_BITS = 16

Matrix = Tuple[int, int, int, int]


@dataclass
class CosetDecomposition:
    """Right coset representatives of Gamma_0(N) in SL2(Z), grouped into cusp classes."""

    level: int
    reps: List[Matrix]
    widths: List[int]
    orbits: List[List[int]] = field(default_factory=list)

    @property
    def index(self) -> int:
        return len(self.reps)

    def cusp_classes(self) -> List[Tuple[Matrix, int]]:
        """(representative, width) per cusp of X_0(N), the cusp at infinity first."""
        return [(self.reps[orbit[0]], len(orbit)) for orbit in self.orbits]


def projective_line(N: int) -> List[Tuple[int, int]]:
    """Canonical representatives (c : d) of P^1(Z/N), (0 : 1) first."""
    if N == 1:
        return [(0, 1)]
    units = [u for u in range(1, N) if gcd(u, N) == 1]
    seen = set()
    points = []
    for c in range(N):
        for d in range(N):
            if gcd(gcd(c, d), N) != 1:
                continue
            canon = min(((u * c) % N, (u * d) % N) for u in units)
            if canon not in seen:
                seen.add(canon)
                points.append(canon)
    points.sort(key=lambda pt: (pt != (0, 1), pt))
    return points


def _lift(c: int, d: int, N: int) -> Matrix:
    if c % N == 0:
        return (1, 0, 0, 1)
    while gcd(c, d) != 1:
        d += N
    x, y, _ = igcdex(d, c)
    # x d + y c = 1
    return (int(x), int(-y), c, d)


def coset_reps(N: int) -> CosetDecomposition:
    """Representatives via the bottom row (c : d) in P^1(Z/N), identity first."""
    if N < 1:
        raise InputError(f"level must be positive, got {N}")
    points = projective_line(N)
    index = {pt: i for i, pt in enumerate(points)}
    reps = [_lift(c, d, N) for c, d in points]

    def canon(c, d):
        if N == 1:
            return (0, 1)
        return min(((u * c) % N, (u * d) % N) for u in range(1, N) if gcd(u, N) == 1)

    orbit_of = [-1] * len(points)
    orbits: List[List[int]] = []
    for i, (c, d) in enumerate(points):
        if orbit_of[i] >= 0:
            continue
        orbit = []
        cur = (c, d)
        while index[cur] not in orbit:
            orbit.append(index[cur])
            cur = canon(cur[0], cur[0] + cur[1])
        for j in orbit:
            orbit_of[j] = len(orbits)
        orbits.append(orbit)
    widths = [len(orbits[orbit_of[i]]) for i in range(len(points))]
    expected = N
    for p in factorint(N):
        expected = expected * (p + 1) // p
    if len(reps) != expected:
        raise InputError(f"coset count {len(reps)} differs from the index {expected}")
    log.debug(f"Gamma_0({N}): {len(reps)} cosets, {len(orbits)} cusps")
    return CosetDecomposition(level=N, reps=reps, widths=widths, orbits=orbits)


@dataclass
class QuadratureResult:
    value: float
    change: float
    nodes: int
    cutoff: float
    tail_bound: float


def cusp_cutoff(cosets: CosetDecomposition, tol: float) -> float:
    """Height above which the trace decays below tol; the slowest mode is e^(-4 pi y / h_max)."""
    h_max = max(cosets.widths)
    return max(1.0, h_max * (flog(1 / tol) + 5) / (4 * pi))


def _panels(cutoff: float) -> List[float]:
    edges = [1.5, 4.0, 12.0]
    return [e for e in edges if e < cutoff] + [cutoff]


def _trace_integral(product: Callable[[np.ndarray], np.ndarray], cosets: CosetDecomposition,
                    cutoff: float, n: int) -> float:
    """Integral over |x| <= 1/2, |z| >= 1, y <= cutoff of the trace, n Gauss nodes per direction and panel."""
    gx, wx = leggauss(n)
    xs = 0.5 * gx
    wxs = 0.5 * wx
    edges = _panels(cutoff)
    zs, weights = [], []
    for x, w1 in zip(xs, wxs):
        lower = np.sqrt(1 - x * x)
        bounds = [lower] + edges
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            ys = 0.5 * (hi - lo) * gx + 0.5 * (hi + lo)
            zs.append(x + 1j * ys)
            weights.append(w1 * 0.5 * (hi - lo) * wx / ys ** 2)
    zs = np.concatenate(zs)
    weights = np.concatenate(weights)
    total = np.zeros(len(zs))
    for a, b, c, d in cosets.reps:
        images = (a * zs + b) / (c * zs + d)
        total += np.real(product(images)) * images.imag
    return float(np.dot(weights, total))


def _adaptive(product, cosets: CosetDecomposition, tol: float, start: int = 16,
              max_nodes: int = 128) -> QuadratureResult:
    cutoff = cusp_cutoff(cosets, tol)
    n = start
    previous = _trace_integral(product, cosets, cutoff, n)
    while True:
        n *= 2
        current = _trace_integral(product, cosets, cutoff, n)
        change = abs(current - previous) / max(abs(current), 1e-300)
        if change < tol:
            break
        if n >= max_nodes:
            raise TruncationError(f"quadrature change {change:.2e} above tolerance {tol:.1e}",
                                  achieved=change)
        previous = current
    kappa = 4 * pi / max(cosets.widths)
    xs = np.linspace(-0.5, 0.5, 33)
    at_top = np.zeros(len(xs))
    for a, b, c, d in cosets.reps:
        images = (a * (xs + 1j * cutoff) + b) / (c * (xs + 1j * cutoff) + d)
        at_top += np.real(product(images)) * images.imag
    tail = float(np.abs(at_top).max()) / (kappa * cutoff ** 2)
    return QuadratureResult(value=current, change=change, nodes=n, cutoff=cutoff, tail_bound=tail)


def petersson_quadrature(f: QExpansion, tol: Optional[float] = None, embedding: int = 1,
                         cosets: Optional[CosetDecomposition] = None) -> QuadratureResult:
    """||f||^2 = sum_j int_F |f(gamma_j z)|^2 Im(gamma_j z) dmu, refined until stable to tol."""
    tol = tol or get_settings().quadrature_tol
    cosets = cosets or coset_reps(f.level)

    def product(w):
        values = eval_form_numpy(f, w, embedding)
        return np.abs(values) ** 2

    result = _adaptive(product, cosets, tol)
    log.info(f"Petersson norm of {f.label}: {result.value:.12g} "
             f"({result.nodes} nodes, change {result.change:.1e}, tail {result.tail_bound:.1e})")
    return result


def rs_pairing_classical(f1: QExpansion, f2: QExpansion, level: Optional[int] = None,
                         tol: Optional[float] = None, embedding: int = 1) -> float:
    """(1/[PSL2(Z):Gamma_0(level)]) int f1(z) f2(-zbar) y dmu over X_0(level)."""
    if f1.level != f2.level:
        raise InputError(f"forms have levels {f1.level} and {f2.level}")
    level = level or f1.level
    if level % f1.level:
        raise InputError(f"level {level} is not a multiple of {f1.level}")
    tol = tol or get_settings().quadrature_tol
    cosets = coset_reps(level)

    def product(w):
        # f2(-conj w) = conj(f2*(w))
        return eval_form_numpy(f1, w, embedding) * np.conj(eval_form_numpy(f2, w, embedding, conjugate=True))

    result = _adaptive(product, cosets, tol)
    return result.value / cosets.index


def _bessel_terms(b: CosetCoefficients, t, cutoff=60):
    total = mp.mpf(0)
    for r, value in b.items():
        if not value:
            continue
        root = 4 * mp.pi * mp.sqrt(mp.mpf(r.numerator) / r.denominator * t)
        m = 1
        while root * m < cutoff:
            total += value * 2 * mp.besselk(0, root * m)
            m += 1
    return total


def rs_theta(b: CosetCoefficients, t):
    """Theta(t) = sum_{m, r} b_r 2 K_0(4 pi m sqrt(r t)), the Mellin kernel of Lambda."""
    return _bessel_terms(b, mp.mpf(t))


def rs_residue(b: CosetCoefficients, t0=mp.mpf("1.25")):
    """R in Theta(t) = Theta(1/t)/t + R/t - R, measured at t0."""
    t0 = mp.mpf(t0)
    return (rs_theta(b, t0) - rs_theta(b, 1 / t0) / t0) / (1 / t0 - 1)


def lambda_rs(b: CosetCoefficients, s, residue=None):
    """Lambda(s) = int_1^oo Theta(t)(t^(s-1) + t^-s) dt + R/(s-1) - R/s."""
    s = mp.mpmathify(s)
    R = rs_residue(b) if residue is None else residue
    integral = mp.quad(lambda t: rs_theta(b, t) * (t ** (s - 1) + t ** (-s)), [1, 2, 4, mp.inf])
    return integral + R / (s - 1) - R / s


def residue_at_0(b: CosetCoefficients, radius=mp.mpf(1) / 4, n_points: int = 12, residue=None):
    """Res_{s=0} Lambda(s) from a Laurent fit on a circle around 0."""
    R = rs_residue(b) if residue is None else residue
    coeffs = fit_laurent(lambda s: lambda_rs(b, s, R), radius, n_points, [-1])
    return mp.re(coeffs[-1])


@dataclass
class LambdaRouteResult:
    norm: object
    residue: object
    residue_check: object
    spread: object
    laurent_residue: object = None


def petersson_from_theta(b: CosetCoefficients, checkpoints=("1.25", "1.5"),
                         laurent: bool = False) -> LambdaRouteResult:
    """||f||^2 = -2 Res_{s=0} Lambda = 2R, with R measured at two points of the functional equation.

    With ``laurent`` the residue is also read off a Laurent fit of Lambda(s) around 0.
    """
    values = [rs_residue(b, mp.mpf(t)) for t in checkpoints]
    R = values[0]
    spread = max(abs(v - R) for v in values)
    if spread > mp.mpf("1e-6") * abs(R):
        log.warning(f"theta functional equation residue spread {mp.nstr(spread, 3)}")
    fitted = residue_at_0(b, residue=R) if laurent else None
    return LambdaRouteResult(norm=2 * R, residue=-R, residue_check=values[1], spread=spread,
                             laurent_residue=fitted)


def cm_period_counts(disc: Discriminant, xi: RingClassChar,
                     cg: Optional[ClassGroup] = None) -> Dict[str, object]:
    """<i(1), 1> = h(O_c) and <i(xi), 1> = sum_sigma xi(sigma) under counting measure."""
    cg = cg or class_group(disc)
    total = CyclotomicNumber.zero(xi.m)
    for i in range(cg.order):
        total = total + xi.value(i)
    return {"trivial": cg.order, "xi": total}


def optimal_rs_closed_form(disc: Discriminant, xi: RingClassChar, prec: int = 256,
                           cg: Optional[ClassGroup] = None) -> Dict[str, object]:
    """-(1/12) h_c sum xi log ||Delta||(x^sigma) and -(1/(12c)) h_c sum xi log|e_c(x^sigma)|."""
    from src.core.modfunc import log_delta_norm
    from src.core.qorders import heegner_point
    from src.core.units import stark_log_sum

    if xi.is_trivial():
        raise InputError("the closed form needs a nontrivial character")
    cg = cg or class_group(disc)
    with mp.workprec(prec + GUARD_BITS):
        norm_sum = mp.re(mp.fsum(xi.numeric(i) * log_delta_norm(heegner_point(form), 6, prec)
                                 for i, form in enumerate(cg.forms)))
        unit_sum = stark_log_sum(disc, xi, prec, cg)
        return {
            "norm_delta": -cg.order * norm_sum / 12,
            "elliptic_unit": -cg.order * unit_sum / (12 * disc.c),
        }
