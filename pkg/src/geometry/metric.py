from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from src.config.settings import settings
from src.core.point import PARAMETER_NAMES, EWPoint, SphericalPoint, to_cartesian
from src.utils.exceptions import BoundarySingularity, InvalidParameters
from src.utils.validators import validate_with_slack


class VolumeElementCase(str, Enum):
    QUBIT = "qubit"      # four parameters, r_minus identically 0
    GENERAL = "general"  # five parameters, any d >= 3


SPHERICAL_LABELS: Tuple[str, ...] = ("r_minus", "r_plus", "R", "theta", "phi")
CARTESIAN_LABELS: Tuple[str, ...] = PARAMETER_NAMES


@dataclass(frozen=True)
class MetricTensor:
    """
    Labeled symmetric matrix of metric components

    Components are SD-normalized (four times Bures) unless produced by bures_tensor().
    """

    labels: Tuple[str, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.shape != (len(self.labels), len(self.labels)):
            raise InvalidParameters(f"matrix shape {matrix.shape} does not match {len(self.labels)} labels")
        matrix.setflags(write=False)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "matrix", matrix)

    @property
    def k(self) -> int:
        return len(self.labels)

    def component(self, a: str, b: str) -> float:
        return float(self.matrix[self.labels.index(a), self.labels.index(b)])

    def submatrix(self, labels: Sequence[str]) -> "MetricTensor":
        index = [self.labels.index(label) for label in labels]
        return MetricTensor(tuple(labels), self.matrix[np.ix_(index, index)])

    def without(self, label: str) -> "MetricTensor":
        return self.submatrix([lab for lab in self.labels if lab != label])

    def scaled(self, factor: float) -> "MetricTensor":
        return MetricTensor(self.labels, self.matrix * factor)

    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))

    def sqrt_det(self) -> float:
        det = self.determinant()
        if det <= 0:
            raise BoundarySingularity(f"metric determinant is not positive ({det!r})")
        return float(np.sqrt(det))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_symmetric(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.T, rtol=0.0, atol=atol))

    def to_document(self) -> Dict[str, Any]:
        return {"labels": list(self.labels), "matrix": self.matrix.tolist()}


def bures_tensor(t: MetricTensor) -> MetricTensor:
    """Bures normalization: exactly one quarter of the SD components"""
    return t.scaled(0.25)


def _require_case_point(r_minus: float, case: VolumeElementCase):
    case = VolumeElementCase(case)
    if case is VolumeElementCase.QUBIT and r_minus != 0.0:
        raise InvalidParameters(f"qubit case requires r_minus == 0 (got {r_minus!r})")
    return case


def _require_interior(r_minus: float, r_plus: float, R: float, case: VolumeElementCase):
    r0 = 1.0 - r_minus - r_plus
    if case is VolumeElementCase.GENERAL and r_minus <= 0.0:
        raise BoundarySingularity(f"r_minus = {r_minus!r} lies on the singular face r_minus = 0")
    if r_plus <= 0.0:
        raise BoundarySingularity(f"r_plus = {r_plus!r} lies on the singular face r_plus = 0")
    if r0 <= 0.0:
        raise BoundarySingularity(f"r0 = {r0!r} lies on the singular face r0 = 0")
    if R >= r0:
        raise BoundarySingularity(f"R = {R!r} reaches the ball boundary r0 = {r0!r}")


def spherical_components(r_minus: float, r_plus: float, R: float, theta: float) -> np.ndarray:
    """
    5x5 SD metric in (r_minus, r_plus, R, theta, phi); no validation

    Only the eight component families below are nonzero.
    """
    r0 = 1.0 - r_minus - r_plus
    denom = (-r0 - R) * (-r0 + R)
    g = np.zeros((5, 5))
    g[0, 0] = 0.5 * (2.0 / r_minus + 1.0 / (r0 + R) - 1.0 / (-r0 + R)) if r_minus > 0 else np.inf
    g[0, 1] = g[1, 0] = r0 / denom
    g[0, 2] = g[2, 0] = -R / ((r0 + R) * (-r0 + R))
    g[1, 1] = 0.5 * (2.0 / r_plus + 1.0 / (r0 + R) - 1.0 / (-r0 + R))
    g[1, 2] = g[2, 1] = -R / ((r0 + R) * (-r0 + R))
    g[2, 2] = r0 / denom
    g[3, 3] = R ** 2 / r0
    g[4, 4] = R ** 2 * np.sin(theta) ** 2 / r0
    return g


def sd_tensor_spherical(s: SphericalPoint, case: VolumeElementCase = VolumeElementCase.GENERAL) -> MetricTensor:
    """
    SD metric tensor in spherical coordinates

    The chart degenerates at R = 0 and theta in {0, pi} (angular components vanish);
    use sd_tensor_cartesian there.
    """
    case = _require_case_point(s.r_minus, case)
    _require_valid(to_cartesian(s))
    _require_interior(s.r_minus, s.r_plus, s.R, case)
    g = spherical_components(s.r_minus, s.r_plus, s.R, s.theta)
    if case is VolumeElementCase.QUBIT:
        return MetricTensor(SPHERICAL_LABELS[1:], g[1:, 1:])
    return MetricTensor(SPHERICAL_LABELS, g)


def cartesian_components(r_minus: float, r_plus: float, r: np.ndarray) -> np.ndarray:
    """
    5x5 SD metric in (r_minus, r_plus, r1, r2, r3); no validation

    Closed form of the spherical pullback; regular at R = 0 where the ball
    block reduces to identity / r0.
    """
    r = np.asarray(r, dtype=float)
    r0 = 1.0 - r_minus - r_plus
    R2 = float(r @ r)
    D = r0 * r0 - R2
    g = np.zeros((5, 5))
    g[0, 0] = 1.0 / r_minus + r0 / D if r_minus > 0 else np.inf
    g[0, 1] = g[1, 0] = r0 / D
    g[1, 1] = 1.0 / r_plus + r0 / D
    g[0, 2:] = g[2:, 0] = r / D
    g[1, 2:] = g[2:, 1] = r / D
    g[2:, 2:] = np.eye(3) / r0 + np.outer(r, r) / (r0 * D)
    return g


def sd_tensor_cartesian(p: EWPoint, case: VolumeElementCase = VolumeElementCase.GENERAL) -> MetricTensor:
    """SD metric tensor in the original EW coordinates"""
    case = _require_case_point(p.r_minus, case)
    _require_valid(p)
    _require_interior(p.r_minus, p.r_plus, p.R, case)
    g = cartesian_components(p.r_minus, p.r_plus, np.array(p.r))
    if case is VolumeElementCase.QUBIT:
        return MetricTensor(CARTESIAN_LABELS[1:], g[1:, 1:])
    return MetricTensor(CARTESIAN_LABELS, g)


def spherical_jacobian(p: EWPoint) -> np.ndarray:
    """d(r_minus, r_plus, R, theta, phi) / d(r_minus, r_plus, r1, r2, r3)"""
    r1, r2, r3 = p.r
    R = p.R
    rho = np.hypot(r2, r3)
    if R == 0.0 or rho == 0.0:
        raise InvalidParameters("spherical chart is degenerate at R = 0 or sin(theta) = 0")
    J = np.zeros((5, 5))
    J[0, 0] = J[1, 1] = 1.0
    J[2, 2:] = np.array([r1, r2, r3]) / R
    J[3, 2:] = np.array([-rho, r1 * r2 / rho, r1 * r3 / rho]) / R ** 2
    J[4, 3:] = np.array([-r3, r2]) / rho ** 2
    return J


def pullback_to_cartesian(t: MetricTensor, p: EWPoint) -> MetricTensor:
    """Literal chain rule J^T g J of a spherical tensor evaluated at the Cartesian point p"""
    J = spherical_jacobian(p)
    if t.labels == SPHERICAL_LABELS:
        return MetricTensor(CARTESIAN_LABELS, J.T @ t.matrix @ J)
    if t.labels == SPHERICAL_LABELS[1:]:
        Jq = J[1:, 1:]
        return MetricTensor(CARTESIAN_LABELS[1:], Jq.T @ t.matrix @ Jq)
    raise InvalidParameters(f"not a spherical tensor: {t.labels}")


def _require_valid(p: EWPoint):
    result = validate_with_slack(p)
    if not result.valid:
        raise InvalidParameters("invalid EW point: " + "; ".join(result.violations))


def printed_quadratic(p: EWPoint) -> float:
    """The quadratic under the square root exactly as typeset: -r1^2 - r2^2 - (r0 + r3)(-r0 + r3)"""
    return -p.r1 ** 2 - p.r2 ** 2 - (p.r0 + p.r3) * (-p.r0 + p.r3)


def volume_element(p: EWPoint, case: VolumeElementCase = VolumeElementCase.GENERAL) -> float:
    """
    SD volume element sqrt(det g) in EW coordinates

    Qubit:   1 / (r0 sqrt(r_plus (r0^2 - R^2)))
    General: 1 / (r0 sqrt(r_minus r_plus (r0^2 - R^2)))
    """
    case = _require_case_point(p.r_minus, case)
    _require_valid(p)
    R = p.R
    _require_interior(p.r_minus, p.r_plus, R, case)
    return volume_element_value(p.r_minus, p.r_plus, R, case)


def volume_element_value(r_minus: float, r_plus: float, R: float, case: VolumeElementCase) -> float:
    """Closed-form volume element from (r_minus, r_plus, R); no validation"""
    r0 = 1.0 - r_minus - r_plus
    D = (r0 - R) * (r0 + R)
    density = r_plus if case is VolumeElementCase.QUBIT else r_minus * r_plus
    return float(1.0 / (r0 * np.sqrt(density * D)))


def volume_element_batch(points: np.ndarray, case: VolumeElementCase, tol: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Volume element over an (N, 5) array of valid points

    Rows within tol of the singular set (R -> r0, r_plus -> 0, r_minus -> 0 in the
    general case, r0 -> 0) get weight 0 and are flagged instead of raising.

    Returns:
        (weights, singular_mask)
    """
    case = VolumeElementCase(case)
    tol = settings.singular_tolerance if tol is None else tol
    points = np.atleast_2d(np.asarray(points, dtype=float))
    r_minus, r_plus = points[:, 0], points[:, 1]
    r0 = 1.0 - r_minus - r_plus
    R = np.sqrt(np.einsum("ij,ij->i", points[:, 2:5], points[:, 2:5]))

    singular = (r_plus <= tol) | (r0 <= tol) | (r0 - R <= tol)
    if case is VolumeElementCase.GENERAL:
        singular |= r_minus <= tol
        density = r_minus * r_plus
    else:
        density = r_plus

    weights = np.zeros(len(points))
    ok = ~singular
    D = (r0[ok] - R[ok]) * (r0[ok] + R[ok])
    weights[ok] = 1.0 / (r0[ok] * np.sqrt(density[ok] * D))
    return weights, singular


def boundary_subtensor(p: EWPoint, case: VolumeElementCase = VolumeElementCase.GENERAL) -> Tuple[MetricTensor, float]:
    """
    Submatrix used for boundary areas, and h = sqrt(det) of it

    Qubit: rows/columns (r1, r2, r3); general: (r_plus, r1, r2, r3).
    """
    case = VolumeElementCase(case)
    full = sd_tensor_cartesian(p, case)
    labels = ("r1", "r2", "r3") if case is VolumeElementCase.QUBIT else ("r_plus", "r1", "r2", "r3")
    sub = full.submatrix(labels)
    return sub, sub.sqrt_det()


def boundary_h_batch(points: np.ndarray, case: VolumeElementCase) -> np.ndarray:
    """Closed-form h for an (N, 5) array of interior points"""
    case = VolumeElementCase(case)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    r_plus = points[:, 1]
    r0 = 1.0 - points[:, 0] - r_plus
    R2 = np.einsum("ij,ij->i", points[:, 2:5], points[:, 2:5])
    D = r0 * r0 - R2
    # ball block: eigenvalues 1/r0 (twice) and r0/D along r
    ball_det = 1.0 / (r0 * D)
    if case is VolumeElementCase.QUBIT:
        return np.sqrt(ball_det)
    # Schur complement of the ball block for the r_plus row reduces to 1/r_plus + 1/r0
    return np.sqrt(ball_det * (1.0 / r_plus + 1.0 / r0))


def abelian_metric(r_minus: float, r_plus: float) -> MetricTensor:
    """Fisher metric of the commutative (r = 0) family, the R -> 0 limit of the (r_minus, r_plus) block"""
    r0 = 1.0 - r_minus - r_plus
    if min(r_minus, r_plus, r0) <= 0:
        raise BoundarySingularity("abelian metric is singular on the simplex boundary")
    return MetricTensor(("r_minus", "r_plus"), [[1 / r_minus + 1 / r0, 1 / r0], [1 / r0, 1 / r_plus + 1 / r0]])


def abelian_volume_element(r_minus: float, r_plus: float) -> float:
    r0 = 1.0 - r_minus - r_plus
    if min(r_minus, r_plus, r0) <= 0:
        raise BoundarySingularity("abelian volume element is singular on the simplex boundary")
    return float(1.0 / np.sqrt(r_minus * r_plus * r0))
