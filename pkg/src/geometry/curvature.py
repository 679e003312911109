import math
from typing import Optional

import numpy as np
from loguru import logger

from src.config.settings import settings
from src.core.point import SphericalPoint
from src.geometry.metric import spherical_components
from src.utils.exceptions import BoundarySingularity, InvalidParameters


def _coordinate_steps(x: np.ndarray, step: float) -> np.ndarray:
    """
    Per-coordinate stencil widths for (r_minus, r_plus, R, theta, phi)

    Each width is step times the distance to the nearest singular face the
    coordinate can move toward.
    """
    r_minus, r_plus, R, theta, _ = x
    r0 = 1.0 - r_minus - r_plus
    gap = r0 - R
    scales = np.array([
        min(r_minus, gap, r0),
        min(r_plus, gap, r0),
        min(R, gap),
        min(theta, math.pi - theta, 1.0),
        1.0,
    ])
    return step * scales


def _check_stencil(x: np.ndarray, h: np.ndarray):
    # nested central differences reach 2h along every axis
    reach = 2.0 * h
    r_minus, r_plus, R, theta, _ = x
    r0_low = 1.0 - (r_minus + reach[0]) - (r_plus + reach[1])
    if (
        r_minus - reach[0] <= 0.0
        or r_plus - reach[1] <= 0.0
        or R - reach[2] <= 0.0
        or theta - reach[3] <= 0.0
        or theta + reach[3] >= math.pi
        or R + reach[2] >= r0_low
    ):
        raise BoundarySingularity(f"curvature stencil leaves the interior at {x.tolist()} with steps {h.tolist()}")


def _bures_metric(x: np.ndarray) -> np.ndarray:
    return 0.25 * spherical_components(x[0], x[1], x[2], x[3])


def _christoffel(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Gamma[a, i, j] of the Bures metric by central differences"""
    n = len(x)
    ginv = np.linalg.inv(_bures_metric(x))
    dg = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h[k]
        dg[k] = (_bures_metric(x + e) - _bures_metric(x - e)) / (2.0 * h[k])
    # dg[k, i, j] = d_k g_ij
    lowered = dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0)  # [i, j, l]
    return 0.5 * np.einsum("al,ijl->aij", ginv, lowered)


def _ricci_scalar(x: np.ndarray, h: np.ndarray) -> float:
    n = len(x)
    gamma = _christoffel(x, h)
    dgamma = np.empty((n, n, n, n))
    for m in range(n):
        e = np.zeros(n)
        e[m] = h[m]
        dgamma[m] = (_christoffel(x + e, h) - _christoffel(x - e, h)) / (2.0 * h[m])

    ricci = (
        np.einsum("aaij->ij", dgamma)
        - np.einsum("jaia->ij", dgamma)
        + np.einsum("aal,lij->ij", gamma, gamma)
        - np.einsum("ajl,lia->ij", gamma, gamma)
    )
    ginv = np.linalg.inv(_bures_metric(x))
    return float(np.einsum("ij,ij->", ginv, ricci))


def scalar_curvature_fd(s: SphericalPoint, step: Optional[float] = None, sd: bool = False) -> float:
    """
    Ricci scalar of the Bures metric on the five-parameter family, numerically

    Christoffel symbols come from central differences of the closed-form
    components and are differentiated again by central differences. Two step
    sizes (h, h/2) are combined by Richardson extrapolation.

    Args:
        s: Interior point in spherical coordinates
        step: Relative step; each coordinate moves by step times its distance to the boundary
        sd: Return the SD-normalized scalar (one quarter of the Bures value)

    Returns:
        Scalar curvature; the closed form for comparison is 20 + 18/r0
    """
    step = settings.curvature_step if step is None else step
    if not step > 0:
        raise InvalidParameters(f"curvature step must be positive, got {step!r}")

    x = s.as_array()
    h = _coordinate_steps(x, step)
    if not np.all(h > 0):
        raise BoundarySingularity(f"curvature requires a strictly interior point, got {x.tolist()}")
    _check_stencil(x, h)

    coarse = _ricci_scalar(x, h)
    fine = _ricci_scalar(x, h / 2.0)
    value = (4.0 * fine - coarse) / 3.0
    logger.debug(f"curvature at r0={s.r0:.6g}: coarse={coarse:.10g} fine={fine:.10g} extrapolated={value:.10g}")
    return value / 4.0 if sd else value


def curvature_closed_form(r0: float, sd: bool = False) -> float:
    """20 + 18/r0 (Bures); diverges as r0 -> 0"""
    if r0 <= 0:
        raise BoundarySingularity("closed-form curvature diverges at r0 = 0")
    value = 20.0 + 18.0 / r0
    return value / 4.0 if sd else value
