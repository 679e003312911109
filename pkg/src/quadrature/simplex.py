import math
from typing import List, Optional, Tuple

from loguru import logger
from scipy import integrate

from src.config.settings import settings
from src.quadrature.integrate import QUAD_LIMIT, SimplexBounds, _Counter, _cap_crossings
from src.regions.spec import RegionSpec
from src.schemas.reports import LabeledValue, Provenance, QuadratureResult
from src.utils.exceptions import NonConvergence

FULL_SIMPLEX = 2.0 * math.pi


def _angle(r_plus: float, c: float) -> float:
    return math.asin(math.sqrt(min(max(r_plus / c, 0.0), 1.0)))


def _feasible_angle(bounds: SimplexBounds, r_minus: float, c: float, w_lo: float, w_hi: float) -> float:
    """Measure of the w-interval where every cap is non-negative at R = 0"""

    def worst(w: float) -> float:
        return bounds.cap(r_minus, c * math.sin(w) ** 2)

    cuts = [w_lo] + sorted(_cap_crossings(worst, w_lo, w_hi)) + [w_hi]
    return sum(b - a for a, b in zip(cuts[:-1], cuts[1:]) if worst(0.5 * (a + b)) >= 0.0)


def _outer(bounds: SimplexBounds, y: float) -> float:
    """
    Inner integral over r_plus, times the dr_minus = 2y dy Jacobian

    r_plus = c sin^2(w), c = 1 - r_minus, turns dr_plus / sqrt(r_plus (c - r_plus))
    into 2 dw.
    """
    r_minus = y * y
    c = 1.0 - r_minus
    if c <= 0.0:
        return 0.0
    lo, hi = bounds.r_plus_bounds(r_minus)
    if hi <= lo:
        return 0.0
    w_lo, w_hi = _angle(lo, c), _angle(hi, c)
    if bounds.caps:
        return 4.0 * _feasible_angle(bounds, r_minus, c, w_lo, w_hi)
    return 4.0 * (w_hi - w_lo)


def simplex_fisher_integrate(
    region: Optional[RegionSpec] = None, tol: Optional[float] = None
) -> Tuple[QuadratureResult, float]:
    """
    Integral of the commutative volume element 1/sqrt(r_plus r_minus r0) over a simplex region

    The full simplex maps onto an octant of the radius-2 sphere, total 2 pi.
    Constraints involving (r1, r2, r3) are evaluated on the commutative family R = 0.

    Returns:
        (integral, probability = integral / 2 pi)

    Raises:
        NonConvergence: the error estimate exceeds tol
    """
    tol = settings.quadrature_tolerance if tol is None else tol
    bounds = SimplexBounds() if region is None else SimplexBounds.from_spec(region)
    lo, hi = bounds.r_minus_range
    lo, hi = max(lo, 0.0), min(hi, 1.0)
    if hi <= lo:
        return QuadratureResult(value=0.0, error=0.0, evaluations=0, method="empty region"), 0.0

    counted = _Counter(lambda y: _outer(bounds, y))
    kinks = [math.sqrt(x) for x in bounds.breakpoints()]
    value, error = integrate.quad(
        counted, math.sqrt(lo), math.sqrt(hi), epsabs=tol, epsrel=tol, limit=QUAD_LIMIT, points=kinks or None
    )
    if not math.isfinite(value) or error > 10.0 * max(tol * max(abs(value), 1.0), 1e-13):
        raise NonConvergence(f"simplex quadrature error estimate {error:.3g} exceeds tolerance {tol:g}")
    result = QuadratureResult(
        value=value, error=error, evaluations=counted.calls,
        method="quad over y = sqrt(r_minus), closed-form arcsine inner integral",
    )
    logger.info(f"simplex Fisher integral {value!r} (probability {value / FULL_SIMPLEX!r})")
    return result, value / FULL_SIMPLEX


def closed_form_constants() -> List[LabeledValue]:
    """
    The two closed forms for the permutation-invariant family, evaluated exactly as printed,
    next to the values stated for them

    Both printed forms evaluate negative; neither is used as an acceptance gate.
    """
    root5, root6 = math.sqrt(5.0), math.sqrt(6.0)
    separable = math.pi / 40.0 * (-16.0 + 6.0 * root6 + 5.0 * math.log(3.0 * (6.0 - root6) / (6.0 + root6)))
    biseparable = math.pi / 10.0 * (
        1.0 - 5.0 * root5 + 4.0 * root6
        - 10.0 * math.log((5.0 + root5) * (6.0 - root6) / ((5.0 - root5) * (6.0 + root6)))
    )
    note = "printed closed form evaluated as typeset"
    return [
        LabeledValue(name="permutation-invariant triseparable, printed form", value=separable,
                     provenance=Provenance.DERIVED, note=note),
        LabeledValue(name="permutation-invariant triseparable, stated value", value=0.170502,
                     provenance=Provenance.PAPER),
        LabeledValue(name="permutation-invariant biseparable, printed form", value=biseparable,
                     provenance=Provenance.DERIVED, note=note),
        LabeledValue(name="permutation-invariant biseparable, stated value", value=0.179607,
                     provenance=Provenance.PAPER),
    ]
