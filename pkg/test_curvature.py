import math

import numpy as np
import pytest

from src.core.point import SphericalPoint
from src.geometry.curvature import curvature_closed_form, scalar_curvature_fd
from src.utils.exceptions import BoundarySingularity, InvalidParameters


@pytest.mark.parametrize("s, expected", [
    (SphericalPoint(r_minus=0.2, r_plus=0.3, R=0.2, theta=1.0, phi=0.5), 56.0),
    (SphericalPoint(r_minus=0.05, r_plus=0.05, R=0.3, theta=1.2, phi=2.0), 40.0),
])
def test_reference_values(s, expected):
    assert curvature_closed_form(s.r0) == pytest.approx(expected)
    assert scalar_curvature_fd(s) == pytest.approx(expected, rel=1e-3)


def test_finite_differences_match_closed_form():
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(7)))
    checked = 0
    while checked < 20:
        r_minus, r_plus = rng.uniform(0.05, 0.4, 2)
        r0 = 1.0 - r_minus - r_plus
        if r0 < 0.2:
            continue
        s = SphericalPoint(
            r_minus=r_minus, r_plus=r_plus, R=rng.uniform(0.2, 0.8) * r0,
            theta=rng.uniform(0.3, math.pi - 0.3), phi=rng.uniform(0.0, 2 * math.pi),
        )
        assert scalar_curvature_fd(s) == pytest.approx(curvature_closed_form(r0), rel=1e-3)
        checked += 1


def test_sd_normalization_is_a_quarter():
    s = SphericalPoint(r_minus=0.2, r_plus=0.3, R=0.2, theta=1.0, phi=0.5)
    assert scalar_curvature_fd(s, sd=True) == pytest.approx(scalar_curvature_fd(s) / 4, rel=1e-12)
    assert curvature_closed_form(0.5, sd=True) == 14.0


def test_grows_as_r0_shrinks():
    values = [curvature_closed_form(r0) for r0 in (0.5, 0.1, 0.01, 0.001)]
    assert values == sorted(values)
    with pytest.raises(BoundarySingularity):
        curvature_closed_form(0.0)


def test_finite_differences_diverge_as_r0_shrinks():
    r0s = (0.3, 0.1, 0.03, 0.01)
    values = []
    for r0 in r0s:
        s = SphericalPoint(r_minus=0.3, r_plus=0.7 - r0, R=0.5 * r0, theta=1.0, phi=0.5)
        values.append(scalar_curvature_fd(s))
        assert values[-1] == pytest.approx(curvature_closed_form(r0), rel=1e-2)
    assert values == sorted(values)
    # r0 * Ric -> 18
    assert values[-1] * r0s[-1] == pytest.approx(18.0 + 20.0 * r0s[-1], rel=1e-2)


@pytest.mark.parametrize("step", [0.0, -1e-3])
def test_rejects_non_positive_step(step):
    with pytest.raises(InvalidParameters):
        scalar_curvature_fd(SphericalPoint(r_minus=0.2, r_plus=0.3, R=0.2, theta=1.0), step=step)


def test_stencil_must_stay_interior():
    with pytest.raises(BoundarySingularity):
        scalar_curvature_fd(SphericalPoint(r_minus=0.2, r_plus=0.3, R=0.2, theta=0.0))
    with pytest.raises(BoundarySingularity):
        scalar_curvature_fd(SphericalPoint(r_minus=0.2, r_plus=0.3, R=0.2, theta=1.0), step=0.6)
