import math

import numpy as np
import pytest

from src.core.point import EWPoint, SphericalPoint, to_cartesian, to_spherical
from src.core.spectrum import maximally_mixed, multiplicities, spectrum
from src.geometry.metric import VolumeElementCase
from src.utils.exceptions import InvalidParameters
from src.utils.validators import valid_mask, validate, validate_with_slack


@pytest.mark.parametrize("d, expected", [(2, (4, 0, 2)), (3, (10, 1, 8)), (4, (20, 4, 20))])
def test_multiplicities(d, expected):
    nu = multiplicities(d)
    assert nu.as_tuple() == expected
    assert nu.nu_plus + nu.nu_minus + 2 * nu.nu_zero == d ** 3


@pytest.mark.parametrize("d", [1, 0, -3, 2.5, True])
def test_multiplicities_rejects_bad_dimension(d):
    with pytest.raises(InvalidParameters):
        multiplicities(d)


def test_paradox_point_is_a_state(paradox_point):
    assert validate(paradox_point).valid
    assert paradox_point.r0 == pytest.approx(0.63)
    assert paradox_point.R ** 2 == pytest.approx(0.37300, abs=1e-5)


def test_simplex_violation_reported():
    result = validate(EWPoint(r_minus=0.5, r_plus=0.6))
    assert not result.valid
    assert any("r0" in v for v in result.violations)


def test_degenerate_ball_boundary_is_valid():
    assert validate(EWPoint(r_minus=0.0, r_plus=1.0)).valid
    assert not validate(EWPoint(r_minus=0.0, r_plus=1.0, r1=1e-9)).valid


def test_slack_admits_rounding_error():
    p = EWPoint(r_minus=0.2, r_plus=0.3, r1=0.5 + 1e-13)
    assert not validate(p).valid
    assert validate_with_slack(p).valid
    assert not validate_with_slack(p, eps=0.0).valid


def test_qubit_case_requires_zero_r_minus():
    assert not validate(EWPoint(r_minus=0.1, r_plus=0.3), qubit=True).valid
    assert validate(EWPoint(r_plus=0.3, r3=0.2), qubit=True).valid


def test_valid_mask_matches_validate():
    rows = np.array([
        [0.1, 0.27, 0.589304, 0.08100014, -0.138433],
        [0.5, 0.6, 0.0, 0.0, 0.0],
        [0.2, 0.2, 0.7, 0.0, 0.0],
        [-0.1, 0.5, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 0.0],
        [np.nan, 0.2, 0.0, 0.0, 0.0],
    ])
    expected = [validate(EWPoint.from_array(row)).valid if np.isfinite(row).all() else False for row in rows]
    np.testing.assert_array_equal(valid_mask(rows), expected)


@pytest.mark.parametrize("r, spherical", [
    ((1.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
    ((0.0, 1.0, 0.0), (1.0, math.pi / 2, 0.0)),
    ((0.0, 0.0, -1.0), (1.0, math.pi / 2, 3 * math.pi / 2)),
])
def test_spherical_convention_uses_r1_as_polar_axis(r, spherical):
    s = to_spherical(EWPoint(r_minus=0.0, r_plus=0.0, r1=r[0], r2=r[1], r3=r[2]))
    np.testing.assert_allclose([s.R, s.theta, s.phi], spherical, atol=1e-15)


def test_spherical_round_trip(paradox_point):
    back = to_cartesian(to_spherical(paradox_point))
    np.testing.assert_allclose(back.as_array(), paradox_point.as_array(), atol=1e-15)
    assert EWPoint.from_spherical(paradox_point.to_spherical()) == back


def test_origin_maps_to_zero_angles():
    s = to_spherical(EWPoint(r_minus=0.1, r_plus=0.2))
    assert (s.R, s.theta, s.phi) == (0.0, 0.0, 0.0)
    assert isinstance(s, SphericalPoint)


def test_document_form():
    p = EWPoint.from_document({"r_plus": 0.25, "r": [0, 0, 0.75]})
    assert p.r_minus == 0.0
    assert p.to_document() == {"r_minus": 0.0, "r_plus": 0.25, "r": [0.0, 0.0, 0.75]}


def test_maximally_mixed_spectrum():
    p = maximally_mixed(3)
    assert p.r_minus == pytest.approx(1 / 27)
    assert p.r_plus == pytest.approx(10 / 27)
    spec = spectrum(p, 3)
    assert spec.total_multiplicity() == 27
    np.testing.assert_allclose(spec.expanded(), np.full(27, 1 / 27), atol=1e-15)


def test_qubit_spectrum():
    spec = spectrum(EWPoint(r_plus=0.25, r3=0.75), 2)
    values = {(round(e.eigenvalue, 12), e.multiplicity) for e in spec}
    assert values == {(1 / 16, 4), (3 / 8, 2), (0.0, 2)}


def test_spectrum_sums_to_one(make_points):
    for d, case in ((2, VolumeElementCase.QUBIT), (3, VolumeElementCase.GENERAL), (4, VolumeElementCase.GENERAL)):
        for p in make_points(5, case):
            spec = spectrum(p, d)
            assert spec.weighted_sum() == pytest.approx(1.0, abs=1e-12)
            assert spec.min_eigenvalue() >= 0.0


def test_spectrum_rejects_fermi_weight_at_d2():
    with pytest.raises(InvalidParameters):
        spectrum(EWPoint(r_minus=0.1, r_plus=0.3), 2)


def test_spectrum_rejects_invalid_point():
    with pytest.raises(InvalidParameters):
        spectrum(EWPoint(r_minus=0.5, r_plus=0.6), 3)
