import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy import integrate
from scipy.optimize import brentq

from src.config.settings import settings
from src.geometry.metric import VolumeElementCase, volume_element_value
from src.regions.spec import Constraint, RegionSpec
from src.schemas.reports import QuadratureResult
from src.utils.exceptions import InvalidParameters, NonConvergence

QUAD_LIMIT = 200

# full-domain integrals of the volume element
GENERAL_TOTAL = math.pi ** 3 / 2.0
QUBIT_TOTAL = 4.0 * math.pi ** 2 / 3.0
QUBIT_TOTAL_AS_PRINTED = 2.0 * math.pi ** 2 / 3.0


def reduced_integrand(case: VolumeElementCase) -> Callable[..., float]:
    """
    Volume element integrated over the Bloch ball R <= r0 at fixed simplex coordinates

    General: f(r_minus, r_plus) = pi^2 r0 / sqrt(r_minus r_plus)
    Qubit:   f(r_plus) = pi^2 r0 / sqrt(r_plus)
    """
    if VolumeElementCase(case) is VolumeElementCase.QUBIT:
        return lambda r_plus: math.pi ** 2 * (1.0 - r_plus) / math.sqrt(r_plus)
    return lambda r_minus, r_plus: math.pi ** 2 * (1.0 - r_minus - r_plus) / math.sqrt(r_minus * r_plus)


def truncated_ball_integral(r0: float, rho: float) -> float:
    """int_{R <= rho} 1 / sqrt(r0^2 - R^2) d^3r for 0 <= rho <= r0"""
    rho = min(max(rho, 0.0), r0)
    return 2.0 * math.pi * (r0 * r0 * math.asin(rho / r0) - rho * math.sqrt(max(r0 * r0 - rho * rho, 0.0)))


def ball_integral_direct(r_minus: float, r_plus: float, case: VolumeElementCase = VolumeElementCase.GENERAL,
                         tol: float = 1e-11) -> float:
    """
    Volume element integrated over the Bloch ball by 3D adaptive quadrature

    R = r0 sin(u) removes the edge singularity; (u, theta, phi) are integrated
    numerically without using the angular symmetry.
    """
    case = VolumeElementCase(case)
    r0 = 1.0 - r_minus - r_plus

    def integrand(phi: float, theta: float, u: float) -> float:
        R = r0 * math.sin(u)
        # dR = r0 cos(u) du and sqrt(r0^2 - R^2) = r0 cos(u) cancel
        density = r_plus if case is VolumeElementCase.QUBIT else r_minus * r_plus
        return R * R * math.sin(theta) / (r0 * math.sqrt(density))

    value, _ = integrate.tplquad(
        integrand, 0.0, math.pi / 2.0, 0.0, math.pi, 0.0, 2.0 * math.pi, epsabs=tol, epsrel=tol
    )
    return value


def ball_integral_volume_element(r_minus: float, r_plus: float, case: VolumeElementCase = VolumeElementCase.GENERAL,
                                 tol: float = 1e-11) -> float:
    """Radial quadrature of the closed-form volume element itself, R = r0 sin(u)"""
    case = VolumeElementCase(case)
    r0 = 1.0 - r_minus - r_plus

    def integrand(u: float) -> float:
        if u >= math.pi / 2.0:
            u = math.nextafter(math.pi / 2.0, 0.0)
        R = r0 * math.sin(u)
        return 4.0 * math.pi * R * R * volume_element_value(r_minus, r_plus, R, case) * r0 * math.cos(u)

    value, _ = integrate.quad(integrand, 0.0, math.pi / 2.0, epsabs=tol, epsrel=tol, limit=QUAD_LIMIT)
    return value


@dataclass
class SimplexBounds:
    """
    Region of the (r_minus, r_plus) simplex with r_plus bounds depending on r_minus

    lower/upper hold affine bounds (a, b) meaning r_plus >= a + b r_minus or
    r_plus <= a + b r_minus; caps hold polynomials q with R^2 <= q(r_minus, r_plus).
    """

    case: VolumeElementCase = VolumeElementCase.GENERAL
    r_minus_range: Tuple[float, float] = (0.0, 1.0)
    lower: List[Tuple[float, float]] = field(default_factory=list)
    upper: List[Tuple[float, float]] = field(default_factory=list)
    caps: List[Callable[[float, float], float]] = field(default_factory=list)

    def r_plus_bounds(self, r_minus: float) -> Tuple[float, float]:
        lo = max([0.0] + [a + b * r_minus for a, b in self.lower])
        hi = min([1.0 - r_minus] + [a + b * r_minus for a, b in self.upper])
        return lo, hi

    def cap(self, r_minus: float, r_plus: float) -> Optional[float]:
        if not self.caps:
            return None
        return min(q(r_minus, r_plus) for q in self.caps)

    def breakpoints(self) -> List[float]:
        """r_minus values where two r_plus bounds cross (kinks of the inner limits)"""
        lines = self.lower + self.upper + [(1.0, -1.0), (0.0, 0.0)]
        lo, hi = self.r_minus_range
        points = set()
        for i, (a1, b1) in enumerate(lines):
            for a2, b2 in lines[i + 1:]:
                if b1 != b2:
                    x = (a2 - a1) / (b1 - b2)
                    if lo < x < hi:
                        points.add(x)
        return sorted(points)

    @classmethod
    def from_spec(cls, spec: RegionSpec, include_bloch: bool = True) -> "SimplexBounds":
        """
        Translate a region spec into simplex bounds

        Constraints free of (r1, r2, r3) must be affine in (r_minus, r_plus).
        Constraints with (r1, r2, r3) must read c R^2 + q(r_minus, r_plus) rel rhs
        and become ball caps; they are dropped when include_bloch is False.
        """
        bounds = cls(case=spec.case)
        lo, hi = 0.0, 1.0
        for constraint in spec.constraints:
            bloch = [t for t in constraint.terms if any(t.exponents[2:])]
            if bloch:
                if include_bloch:
                    bounds.caps.append(_cap_from(constraint, bloch))
                continue
            a_minus, a_plus, const = _affine_parts(constraint)
            sign = 1.0 if constraint.rel == "<=" else -1.0
            # sign * (a_minus r_minus + a_plus r_plus) <= sign * rhs
            a_minus, a_plus, rhs = sign * a_minus, sign * a_plus, sign * (float(constraint.rhs) - const)
            if a_plus == 0.0:
                if a_minus > 0:
                    hi = min(hi, rhs / a_minus)
                elif a_minus < 0:
                    lo = max(lo, rhs / a_minus)
                elif rhs < 0:
                    hi = lo - 1.0
            elif a_plus > 0:
                bounds.upper.append((rhs / a_plus, -a_minus / a_plus))
            else:
                bounds.lower.append((rhs / a_plus, -a_minus / a_plus))
        if spec.case is VolumeElementCase.QUBIT:
            hi = lo = 0.0
        bounds.r_minus_range = (lo, hi)
        return bounds


def _affine_parts(constraint: Constraint) -> Tuple[float, float, float]:
    a_minus = a_plus = const = 0.0
    for term in constraint.terms:
        e = term.exponents
        if e == (1, 0, 0, 0, 0):
            a_minus += float(term.coefficient)
        elif e == (0, 1, 0, 0, 0):
            a_plus += float(term.coefficient)
        elif e == (0, 0, 0, 0, 0):
            const += float(term.coefficient)
        else:
            raise InvalidParameters(f"constraint '{constraint.describe()}' is not affine in (r_minus, r_plus)")
    return a_minus, a_plus, const


def _cap_from(constraint: Constraint, bloch_terms) -> Callable[[float, float], float]:
    squares = {(0, 0, 2, 0, 0), (0, 0, 0, 2, 0), (0, 0, 0, 0, 2)}
    coefficients = {t.exponents: float(t.coefficient) for t in bloch_terms}
    if set(coefficients) != squares or len(set(coefficients.values())) != 1:
        raise InvalidParameters(f"constraint '{constraint.describe()}' is not of the form c R^2 + q(r_minus, r_plus)")
    c = next(iter(coefficients.values()))
    if constraint.rel == ">=":
        c = -c
    if c <= 0:
        raise InvalidParameters(f"constraint '{constraint.describe()}' bounds R from below")
    rest = [t for t in constraint.terms if not any(t.exponents[2:])]
    rhs = float(constraint.rhs)
    sign = 1.0 if constraint.rel == "<=" else -1.0

    def cap(r_minus: float, r_plus: float) -> float:
        q = sum(float(t.coefficient) * r_minus ** t.exponents[0] * r_plus ** t.exponents[1] for t in rest)
        return sign * (rhs - q) / c

    return cap


class _Counter:
    def __init__(self, func: Callable[..., float]):
        self.func = func
        self.calls = 0

    def __call__(self, *args) -> float:
        self.calls += 1
        return self.func(*args)


def _cap_crossings(func: Callable[[float], float], lo: float, hi: float, n: int = 32) -> List[float]:
    grid = np.linspace(lo, hi, n)
    values = [func(x) for x in grid]
    roots = []
    for k in range(n - 1):
        if values[k] * values[k + 1] < 0.0:
            roots.append(brentq(func, grid[k], grid[k + 1], xtol=1e-15))
    return roots


def _inner_t(bounds: SimplexBounds, s: float, tol: float) -> Tuple[float, float, int]:
    """Integral over t = sqrt(r_plus) at fixed s = sqrt(r_minus); returns (value, error, evaluations)"""
    r_minus = s * s
    lo, hi = bounds.r_plus_bounds(r_minus)
    if hi <= lo:
        return 0.0, 0.0, 0
    t_lo, t_hi = math.sqrt(lo), math.sqrt(hi)
    general = bounds.case is VolumeElementCase.GENERAL
    # dr = 2 sqrt(r) dt cancels the 1/sqrt factors: 4 in 2D, 2 in 1D
    jacobian = 4.0 if general else 2.0

    if not bounds.caps:
        reduced = reduced_integrand(bounds.case)

        def full_ball(t: float) -> float:
            if t <= 0.0 or (general and s <= 0.0):
                # limit of the reduced integrand times the Jacobian
                return jacobian * math.pi ** 2 * (1.0 - r_minus - t * t)
            if general:
                return reduced(r_minus, t * t) * jacobian * s * t
            return reduced(t * t) * jacobian * t

        counted = _Counter(full_ball)
        value, error = integrate.quad(counted, t_lo, t_hi, epsabs=tol, epsrel=tol, limit=QUAD_LIMIT)
        return value, error, counted.calls

    def integrand(t: float) -> float:
        r_plus = t * t
        r0 = 1.0 - r_minus - r_plus
        if r0 <= 0.0:
            return 0.0
        q = bounds.cap(r_minus, r_plus)
        rho = math.sqrt(q) if q > 0.0 else 0.0
        return jacobian * truncated_ball_integral(r0, rho) / r0

    def excess(t: float) -> float:
        r_plus = t * t
        r0 = 1.0 - r_minus - r_plus
        return bounds.cap(r_minus, r_plus) - r0 * r0

    def positive(t: float) -> float:
        return bounds.cap(r_minus, t * t)

    kinks = sorted(set(_cap_crossings(excess, t_lo, t_hi) + _cap_crossings(positive, t_lo, t_hi)))
    counted = _Counter(integrand)
    value, error = integrate.quad(
        counted, t_lo, t_hi, epsabs=tol, epsrel=tol, limit=QUAD_LIMIT, points=kinks or None
    )
    return value, error, counted.calls


def integrate_region(bounds: SimplexBounds, tol: Optional[float] = None) -> QuadratureResult:
    """
    Integral of the volume element over the region, after the radial reduction

    Every 1/sqrt endpoint singularity is removed by r = t^2.

    Raises:
        NonConvergence: the combined error estimate exceeds tol
    """
    tol = settings.quadrature_tolerance if tol is None else tol
    if bounds.case is VolumeElementCase.QUBIT:
        value, error, evaluations = _inner_t(bounds, 0.0, tol)
        method = "quad over t = sqrt(r_plus)"
    else:
        lo, hi = bounds.r_minus_range
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        if hi <= lo:
            return QuadratureResult(value=0.0, error=0.0, evaluations=0, method="empty region")
        inner_errors = []

        def outer(s: float) -> float:
            value, error, _ = _inner_t(bounds, s, tol)
            inner_errors.append(error)
            return value

        counted = _Counter(outer)
        kinks = [math.sqrt(x) for x in bounds.breakpoints()]
        value, error = integrate.quad(
            counted, math.sqrt(lo), math.sqrt(hi), epsabs=tol, epsrel=tol, limit=QUAD_LIMIT, points=kinks or None
        )
        error += (math.sqrt(hi) - math.sqrt(lo)) * max(inner_errors, default=0.0)
        evaluations = counted.calls
        method = "nested QUADPACK over s = sqrt(r_minus), t = sqrt(r_plus)"

    if not math.isfinite(value) or error > max(tol * max(abs(value), 1.0), 1e-13) * 10.0:
        raise NonConvergence(f"quadrature error estimate {error:.3g} exceeds tolerance {tol:g}")
    return QuadratureResult(value=value, error=error, evaluations=evaluations, method=method)


def normalization_constants(tol: Optional[float] = None) -> Tuple[float, float]:
    """
    Full-domain integrals of the volume element: (qubit_total, general_total)

    The general total is pi^3/2; the qubit total is 4 pi^2 / 3.
    """
    qubit = integrate_region(SimplexBounds(case=VolumeElementCase.QUBIT, r_minus_range=(0.0, 0.0)), tol)
    general = integrate_region(SimplexBounds(), tol)
    logger.info(f"normalization: qubit {qubit.value!r}, general {general.value!r}")
    return qubit.value, general.value


def integrate_probability(spec_or_bounds, tol: Optional[float] = None, include_bloch: bool = True) -> QuadratureResult:
    """
    SD probability of a region by deterministic quadrature

    Returns:
        QuadratureResult whose value is the region integral over the full-domain total
    """
    bounds = spec_or_bounds if isinstance(spec_or_bounds, SimplexBounds) else SimplexBounds.from_spec(
        spec_or_bounds, include_bloch=include_bloch
    )
    total = GENERAL_TOTAL if bounds.case is VolumeElementCase.GENERAL else QUBIT_TOTAL
    region = integrate_region(bounds, tol)
    return QuadratureResult(
        value=region.value / total,
        error=region.error / total,
        evaluations=region.evaluations,
        method=region.method,
    )
