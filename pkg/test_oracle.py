import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from src.core.point import EWPoint
from src.core.spectrum import maximally_mixed, spectrum
from src.geometry.metric import VolumeElementCase, sd_tensor_cartesian
from src.oracle.commutant import CommutantBasis, permutation_operators, projectors, sigma_operators
from src.oracle.density import (
    DensityMatrix,
    density_matrix,
    fidelity_bures,
    is_ppt,
    max_relative_deviation,
    partial_transpose_min_eig,
    ppt_min_eig_batch,
    random_density_matrix,
    sd_tensor_direct,
    twirl,
)
from src.utils.exceptions import DegenerateSpectrum, InvalidParameters
from src.utils.validators import validate_with_slack


@pytest.mark.parametrize("d", [2, 3, 4])
def test_permutation_operator_traces(d):
    ops = permutation_operators(d)
    np.testing.assert_array_equal(ops["e"], np.eye(d ** 3))
    for name in ("(12)", "(13)", "(23)"):
        assert np.trace(ops[name]) == d ** 2
    for name in ("(123)", "(132)"):
        assert np.trace(ops[name]) == d


def test_projectors():
    p_plus, p_minus, p_zero = projectors(2)
    np.testing.assert_allclose(p_minus, 0.0, atol=1e-15)
    p_plus, _, p_zero = projectors(3)
    assert np.trace(p_plus) == pytest.approx(10)
    np.testing.assert_allclose(p_plus @ p_zero, 0.0, atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_sigma_algebra(d):
    s1, s2, s3 = sigma_operators(d)
    p_zero = CommutantBasis.for_dimension(d).p_zero
    np.testing.assert_allclose(s3 @ s3, p_zero, atol=1e-12)
    np.testing.assert_allclose(s1 @ s3 + s3 @ s1, 0.0, atol=1e-12)
    for s in (s1, s2, s3):
        assert abs(np.trace(s)) < 1e-12


def test_basis_is_cached_and_read_only():
    basis = CommutantBasis.for_dimension(3)
    assert CommutantBasis.for_dimension(3) is basis
    assert not basis.p_plus.flags.writeable
    basis.check_invariants()


@pytest.mark.parametrize("d", [1, 7])
def test_dimension_range(d):
    with pytest.raises(InvalidParameters):
        CommutantBasis.for_dimension(d)


def test_maximally_mixed_density_matrix():
    rho = density_matrix(maximally_mixed(3), 3)
    np.testing.assert_allclose(rho.matrix, np.eye(27) / 27, atol=1e-15)


def test_density_matrix_spectrum(general_points):
    for p in general_points[:5]:
        for d in (3, 4):
            rho = density_matrix(p, d)
            assert rho.trace() == pytest.approx(1.0, abs=1e-12)
            assert rho.hermiticity_deviation() < 1e-14
            np.testing.assert_allclose(rho.eigenvalues(), spectrum(p, d).expanded(), atol=1e-10)


def test_density_matrix_rejects_fermi_weight_at_d2():
    with pytest.raises(InvalidParameters):
        density_matrix(EWPoint(r_minus=0.1, r_plus=0.3), 2)


def test_oracle_reference_points():
    p = EWPoint(r_minus=0.1, r_plus=0.3, r1=0.1, r2=0.2, r3=0.1)
    assert max_relative_deviation(sd_tensor_direct(p, 3).matrix, sd_tensor_cartesian(p).matrix) < 1e-8
    q = EWPoint(r_plus=0.25, r1=0.05, r2=0.05, r3=0.05)
    direct = sd_tensor_direct(q, 2)
    assert direct.labels == ("r_plus", "r1", "r2", "r3")
    closed = sd_tensor_cartesian(q, VolumeElementCase.QUBIT)
    assert max_relative_deviation(direct.matrix, closed.matrix) < 1e-8


def test_oracle_equivalence(make_points):
    for p in make_points(1000):
        assert max_relative_deviation(sd_tensor_direct(p, 3).matrix, sd_tensor_cartesian(p).matrix) < 1e-8
    for p in make_points(1000, VolumeElementCase.QUBIT):
        closed = sd_tensor_cartesian(p, VolumeElementCase.QUBIT)
        assert max_relative_deviation(sd_tensor_direct(p, 2).matrix, closed.matrix) < 1e-8


def test_tensor_independent_of_dimension(general_points):
    for p in general_points[:5]:
        assert max_relative_deviation(sd_tensor_direct(p, 4).matrix, sd_tensor_cartesian(p).matrix) < 1e-6


def test_tensor_invariant_under_sigma_rotation(paradox_point):
    basis = CommutantBasis.for_dimension(3)
    O = Rotation.from_euler("zyx", [0.3, -0.7, 1.1]).as_matrix()
    rotated = sd_tensor_direct(paradox_point, 3, basis.rotated(O))
    # the rotated triple carries the rotated Bloch vector
    p = paradox_point
    moved = EWPoint.from_array(np.concatenate([[p.r_minus, p.r_plus], O @ np.array(p.r)]))
    J = np.eye(5)
    J[2:, 2:] = O
    expected = J.T @ sd_tensor_cartesian(moved).matrix @ J
    np.testing.assert_allclose(rotated.matrix, expected, rtol=1e-8, atol=1e-8)


def test_degenerate_spectrum_rejected():
    with pytest.raises(DegenerateSpectrum):
        sd_tensor_direct(EWPoint(r_minus=0.1, r_plus=0.3, r1=0.6), 3)


def test_fidelity_identity_and_commuting_pair():
    rho = density_matrix(EWPoint(r_minus=0.1, r_plus=0.3, r1=0.2), 3)
    F, dB2 = fidelity_bures(rho, rho)
    assert F == pytest.approx(1.0, abs=1e-12)
    assert dB2 == pytest.approx(0.0, abs=1e-12)

    F, dB2 = fidelity_bures(density_matrix(EWPoint(r_plus=1.0), 2), density_matrix(EWPoint(r_plus=0.25), 2))
    assert F == pytest.approx(0.25, abs=1e-12)
    assert dB2 == pytest.approx(1.0, abs=1e-12)


def test_fidelity_second_order_matches_metric():
    p = EWPoint(r_minus=0.1, r_plus=0.3, r1=0.1, r2=0.2, r3=0.1)
    g = sd_tensor_direct(p, 3).matrix
    v = np.array([0.3, -0.2, 0.5, 0.1, -0.4])
    rho = density_matrix(p, 3)
    steps = np.geomspace(1e-2, 1e-4, 5)
    errors = []
    for eps in steps:
        moved = density_matrix(EWPoint.from_array(p.as_array() + eps * v), 3)
        _, dB2 = fidelity_bures(rho, moved)
        errors.append(abs(dB2 - 0.25 * eps ** 2 * v @ g @ v))
    order, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    assert order >= 2.7


def test_fidelity_dimension_mismatch():
    with pytest.raises(InvalidParameters):
        fidelity_bures(density_matrix(EWPoint(r_plus=0.5), 2), density_matrix(EWPoint(r_plus=0.5), 3))


def test_partial_transpose_of_maximally_mixed():
    assert partial_transpose_min_eig(maximally_mixed(3), 3) == pytest.approx(1 / 27, abs=1e-14)
    assert is_ppt(maximally_mixed(3), 3)


def test_partial_transpose_spectrum_is_bounded(general_points):
    for p in general_points:
        assert partial_transpose_min_eig(p, 3) >= -0.5


def test_ppt_batch_matches_single_points(general_points):
    points = np.array([p.as_array() for p in general_points])
    expected = [partial_transpose_min_eig(p, 3) for p in general_points]
    np.testing.assert_allclose(ppt_min_eig_batch(points, 3, block=7), expected, atol=1e-12)


def test_ppt_flags_agree_across_dimensions(qubit_points):
    for p in qubit_points:
        low, high = partial_transpose_min_eig(p, 2), partial_transpose_min_eig(p, 3)
        if min(abs(low), abs(high)) < 1e-6:
            continue
        assert (low >= 0) == (high >= 0)


def test_twirl_fixes_ew_states(general_points):
    for p in general_points[:5]:
        np.testing.assert_allclose(twirl(density_matrix(p, 3)).as_array(), p.as_array(), atol=1e-12)


def test_twirl_of_product_state():
    matrix = np.zeros((8, 8))
    matrix[0, 0] = 1.0
    p = twirl(DensityMatrix.from_matrix(matrix))
    np.testing.assert_allclose(p.as_array(), [0.0, 1.0, 0.0, 0.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("d, rank", [(2, None), (3, None), (3, 1)])
def test_twirl_output_is_a_state(rng, d, rank):
    for _ in range(5):
        p = twirl(random_density_matrix(d, rng, rank))
        assert validate_with_slack(p, eps=1e-10).valid


def test_twirl_rejects_non_state():
    with pytest.raises(InvalidParameters):
        twirl(DensityMatrix.from_matrix(np.eye(8)))
