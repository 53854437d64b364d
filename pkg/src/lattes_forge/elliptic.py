"""Weierstrass P on the torus C/(Z + gamma Z) and the normalized quotient map.

Evaluation uses the nome q = exp(i pi gamma) and Jacobi theta series, which
converge geometrically once the argument is reduced to the centered
fundamental domain.  A truncated symmetric lattice sum is provided as a slow,
algorithmically independent cross-check (`weierstrass_p_lattice_sum`).

The quotient map `theta_map` is the degree-two branched cover of the sphere
normalized so that the four branch values are 0, infinity, 1 and w(gamma):

    0 -> 0,   (1+gamma)/2 -> infinity,   1/2 -> 1,   gamma/2 -> w.

`theta_data` packages the two finite branch values together with the
quadratic expansion coefficients of the quotient map at 1/2 and gamma/2 and
verifies the cross-ratio identity they must satisfy.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .dynamics import SpherePoint
from .errors import LemmaViolation, NonConvergent, PoleAtLatticePoint

_MAX_TERMS = 220
_LOG_CUT = -41.0  # stop theta terms below ~1.5e-18 in magnitude


@dataclass(frozen=True)
class TorusParameter:
    """Lattice shape gamma with Im(gamma) > 0."""

    gamma: complex

    def __post_init__(self):
        if not (self.gamma.imag > 0):
            raise ValueError(f"gamma must have positive imaginary part, got {self.gamma}")


@dataclass(frozen=True)
class TorusPoint:
    """Point s + t*gamma on the torus, coordinates taken mod 1.

    Coordinates may be `Fraction` (exact addresses survive arithmetic) or
    floats.  Construction does not reduce; call `reduced()` when needed.
    """

    s: object
    t: object

    def reduced(self) -> "TorusPoint":
        return TorusPoint(self.s % 1, self.t % 1)

    def centered(self) -> tuple[float, float]:
        """Coordinates reduced into [-1/2, 1/2)."""
        s = float(self.s) % 1.0
        t = float(self.t) % 1.0
        if s >= 0.5:
            s -= 1.0
        if t >= 0.5:
            t -= 1.0
        return s, t

    def is_lattice_point(self, eps: float = 1e-13) -> bool:
        s, t = self.centered()
        return abs(s) < eps and abs(t) < eps

    def is_half_lattice_point(self, eps: float = 1e-13) -> bool:
        s, t = self.centered()
        return min(abs(s), abs(abs(s) - 0.5)) < eps and min(abs(t), abs(abs(t) - 0.5)) < eps

    def value(self, gamma: complex) -> complex:
        s, t = self.centered()
        return s + t * gamma


HALF_LATTICE = (
    TorusPoint(Fraction(0), Fraction(0)),
    TorusPoint(Fraction(1, 2), Fraction(0)),
    TorusPoint(Fraction(0), Fraction(1, 2)),
    TorusPoint(Fraction(1, 2), Fraction(1, 2)),
)


def _theta(kind: int, v: complex, lq: complex, max_terms: int = _MAX_TERMS) -> complex:
    """Jacobi theta_kind(v, q) with log-nome lq = log q, |q| < 1."""
    decay = -lq.real
    iv = abs(v.imag)
    if kind in (1, 2):
        hump = iv / decay - 0.5
        acc = 0j
        n = 0
        while True:
            e = (n + 0.5) ** 2
            logmag = e * lq.real + (2 * n + 1) * iv
            if n > hump + 2 and logmag < _LOG_CUT:
                break
            arg = (2 * n + 1) * v
            base = cmath.exp(e * lq)
            if kind == 1:
                term = base * cmath.sin(arg)
                if n % 2:
                    term = -term
            else:
                term = base * cmath.cos(arg)
            acc += term
            n += 1
            if n > max_terms:
                raise NonConvergent(f"theta_{kind} series needed more than {max_terms} terms")
        return 2.0 * acc
    if kind in (3, 4):
        hump = iv / decay
        acc = 1.0 + 0j
        n = 1
        while True:
            logmag = n * n * lq.real + 2 * n * iv
            if n > hump + 2 and logmag < _LOG_CUT:
                break
            term = cmath.exp(n * n * lq) * cmath.cos(2 * n * v)
            if kind == 4 and n % 2:
                term = -term
            acc += 2.0 * term
            n += 1
            if n > max_terms:
                raise NonConvergent(f"theta_{kind} series needed more than {max_terms} terms")
        return acc
    raise ValueError(f"theta kind must be 1..4, got {kind}")


class _TorusContext:
    """Per-gamma constants for P evaluation.

    e3_formula uses the theta-constant expression; the pairing
    P(z) = e3 + (pi c2 c3 theta4(pi z)/theta1(pi z))^2 then reproduces the
    double pole at the lattice via theta1'(0) = pi... (checked against the
    lattice sum in the tests).
    """

    def __init__(self, gamma: complex, tol: float):
        if not (gamma.imag > 0):
            raise ValueError("gamma must lie in the upper half plane")
        self.gamma = gamma
        self.tol = tol
        self.lq = 1j * math.pi * gamma  # log of the nome
        self.c2 = _theta(2, 0j, self.lq)
        self.c3 = _theta(3, 0j, self.lq)
        self.c4 = _theta(4, 0j, self.lq)
        pi2_3 = math.pi ** 2 / 3.0
        self.e1_formula = pi2_3 * (self.c3 ** 4 + self.c4 ** 4)
        self.e2_formula = pi2_3 * (self.c2 ** 4 - self.c4 ** 4)
        self.e3_formula = -pi2_3 * (self.c2 ** 4 + self.c3 ** 4)

    def p_value(self, tau: TorusPoint) -> complex:
        if tau.is_lattice_point():
            raise PoleAtLatticePoint(f"P has a double pole at {tau}")
        s, t = tau.centered()
        z = s + t * self.gamma
        v = math.pi * z
        th1 = _theta(1, v, self.lq)
        th4 = _theta(4, v, self.lq)
        ratio = math.pi * self.c2 * self.c3 * th4 / th1
        return self.e3_formula + ratio * ratio


@lru_cache(maxsize=64)
def _context(gamma: complex, tol: float) -> _TorusContext:
    return _TorusContext(gamma, tol)


def weierstrass_p(tau: TorusPoint, gamma: complex, tol: float = 1e-10) -> complex:
    """P(s + t*gamma) for the lattice Z + gamma Z, via the theta q-series."""
    return _context(gamma, tol).p_value(tau)


def weierstrass_p_lattice_sum(tau: TorusPoint, gamma: complex, box: int = 200) -> complex:
    """Brute-force P by the symmetric truncated sum over |m|, |n| <= box.

    Slow reference implementation used only as an independent oracle.
    """
    if tau.is_lattice_point():
        raise PoleAtLatticePoint(f"P has a double pole at {tau}")
    s, t = tau.centered()
    z = s + t * gamma
    m, n = np.mgrid[-box:box + 1, -box:box + 1]
    w = m + n * np.complex128(gamma)
    w = w[(m != 0) | (n != 0)]
    terms = 1.0 / (z - w) ** 2 - 1.0 / w ** 2
    # pair +/-w before accumulating so the O(1/w^3) parts cancel exactly
    return 1.0 / z ** 2 + complex(np.sum(terms))


@dataclass(frozen=True)
class HalfPeriodValues:
    """P at the three half periods: e1 = P(1/2), e2 = P((1+gamma)/2), e3 = P(gamma/2)."""

    gamma: complex
    e1: complex
    e2: complex
    e3: complex


def half_periods(gamma: complex, tol: float = 1e-10) -> HalfPeriodValues:
    """Evaluate P at the three half periods and sanity-check e1 + e2 + e3 = 0."""
    ctx = _context(gamma, tol)
    e1 = ctx.p_value(HALF_LATTICE[1])
    e2 = ctx.p_value(HALF_LATTICE[3])
    e3 = ctx.p_value(HALF_LATTICE[2])
    scale = max(abs(e1), abs(e2), abs(e3), 1.0)
    if abs(e1 + e2 + e3) > 10.0 * max(tol, 1e-13) * scale:
        raise LemmaViolation(f"half-period values do not sum to zero at gamma={gamma}")
    if min(abs(e1 - e2), abs(e1 - e3), abs(e2 - e3)) < 1e-8 * scale:
        raise LemmaViolation(f"half-period values are not distinct at gamma={gamma}")
    return HalfPeriodValues(gamma, e1, e2, e3)


def theta_map(tau: TorusPoint, gamma: complex, tol: float = 1e-10) -> SpherePoint:
    """Quotient map to the sphere: Moebius-normalized P with branch values 0, oo, 1, w."""
    if tau.is_lattice_point():
        return SpherePoint.zero()
    hp = half_periods(gamma, tol)
    p = weierstrass_p(tau, gamma, tol)
    return SpherePoint.make(hp.e1 - hp.e2, p - hp.e2)


def theta_map_affine(tau: TorusPoint, gamma: complex, tol: float = 1e-10) -> complex:
    """Affine value of the quotient map; only valid away from (1+gamma)/2."""
    if tau.is_lattice_point():
        return 0j
    hp = half_periods(gamma, tol)
    p = weierstrass_p(tau, gamma, tol)
    return (hp.e1 - hp.e2) / (p - hp.e2)


@dataclass(frozen=True)
class ThetaData:
    """Finite branch values of the quotient map and its quadratic coefficients.

    v and w are the images of 1/2 and gamma/2; lam and mu are the tau^2
    coefficients of the quotient map expanded about those points.  kappa is
    the shared combination 4*lam/(v*(v-w)) = 4*mu/(w*(w-v)).
    """

    gamma: complex
    v: complex
    w: complex
    lam: complex
    mu: complex
    kappa: complex


def _richardson_even(samples: list[complex]) -> tuple[complex, float]:
    """Extrapolate D(h), D(h/2), ... for an even error expansion in h."""
    table = [list(samples)]
    levels = len(samples)
    for i in range(1, levels):
        prev = table[-1]
        factor = 4.0 ** i
        table.append([(factor * prev[m + 1] - prev[m]) / (factor - 1.0) for m in range(len(prev) - 1)])
    best = table[-1][0]
    err = abs(table[-1][0] - table[-2][0]) if levels > 1 else abs(best)
    return best, err


def _quadratic_coefficient(base_s: float, base_t: float, center: complex, gamma: complex,
                           tol: float, h0: float = 0.02, levels: int = 4) -> tuple[complex, float]:
    """tau^2 coefficient of the quotient map about a half period.

    Second central differences along the real direction, Richardson
    extrapolated.  The map is even about each half period so the error
    expansion contains only even powers of h.
    """
    h0 = max(h0, tol ** 0.25 / 8.0)
    diffs = []
    h = h0
    for _ in range(levels):
        plus = theta_map_affine(TorusPoint(base_s + h, base_t), gamma, tol)
        minus = theta_map_affine(TorusPoint(base_s - h, base_t), gamma, tol)
        diffs.append((plus - 2.0 * center + minus) / (h * h))
        h *= 0.5
    second, err = _richardson_even(diffs)
    return second / 2.0, err / 2.0


def theta_data(gamma: complex, tol: float = 1e-10) -> ThetaData:
    """Branch values and quadratic coefficients, with the identity checks.

    Raises LemmaViolation if lam/v + mu/w fails to vanish within 100*tol or
    the two kappa expressions disagree.
    """
    v = theta_map_affine(TorusPoint(Fraction(1, 2), Fraction(0)), gamma, tol)
    w = theta_map_affine(TorusPoint(Fraction(0), Fraction(1, 2)), gamma, tol)
    if min(abs(v), abs(w), abs(v - w)) < 1e-8:
        raise LemmaViolation(f"branch values degenerate at gamma={gamma}: v={v}, w={w}")
    lam, lam_err = _quadratic_coefficient(0.5, 0.0, v, gamma, tol)
    mu, mu_err = _quadratic_coefficient(0.0, 0.5, w, gamma, tol)
    if abs(lam) < 1e-8 or abs(mu) < 1e-8:
        raise LemmaViolation(f"quadratic coefficient vanished at gamma={gamma}")
    check = abs(lam / v + mu / w)
    if check > 100.0 * tol:
        raise LemmaViolation(
            f"quadratic coefficients violate lam/v = -mu/w at gamma={gamma}: residual {check:.3e}")
    kappa = 4.0 * lam / (v * (v - w))
    kappa_alt = 4.0 * mu / (w * (w - v))
    if abs(kappa - kappa_alt) > 100.0 * tol * max(1.0, abs(kappa)):
        raise LemmaViolation(
            f"kappa expressions disagree at gamma={gamma}: {abs(kappa - kappa_alt):.3e}")
    return ThetaData(gamma, v, w, lam, mu, kappa)
