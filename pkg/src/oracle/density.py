from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from src.config.settings import settings
from src.core.point import EWPoint
from src.core.spectrum import check_point_for_dimension
from src.geometry.metric import CARTESIAN_LABELS, MetricTensor
from src.oracle.commutant import CommutantBasis
from src.utils.exceptions import DegenerateSpectrum, InvalidParameters

Sigmas = Tuple[np.ndarray, np.ndarray, np.ndarray]


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian d^3 x d^3 matrix of a tripartite state on (C^d)^(x3)"""

    matrix: np.ndarray = field(repr=False)
    d: int

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, d: Optional[int] = None) -> "DensityMatrix":
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidParameters(f"density matrix must be square, got shape {matrix.shape}")
        if d is None:
            d = int(round(matrix.shape[0] ** (1.0 / 3.0)))
        if d ** 3 != matrix.shape[0]:
            raise InvalidParameters(f"matrix of size {matrix.shape[0]} is not d^3 for d={d}")
        return cls(matrix, d)

    @property
    def dim(self) -> int:
        return self.d ** 3

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermiticity_deviation(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    def check_state(self, psd_tolerance: Optional[float] = None, trace_tolerance: float = 1e-12):
        """Raise InvalidParameters unless Hermitian, unit trace and PSD within tolerance"""
        psd_tolerance = settings.psd_tolerance if psd_tolerance is None else psd_tolerance
        if self.hermiticity_deviation() > 1e-12:
            raise InvalidParameters(f"matrix is not Hermitian (deviation {self.hermiticity_deviation():.3g})")
        if abs(self.trace() - 1.0) > trace_tolerance:
            raise InvalidParameters(f"trace is {self.trace()!r}, expected 1")
        if self.min_eigenvalue() < -psd_tolerance:
            raise InvalidParameters(f"matrix is not positive semidefinite (min eigenvalue {self.min_eigenvalue():.3g})")


def _coefficient_operators(basis: CommutantBasis, sigma: Optional[Sigmas] = None) -> List[np.ndarray]:
    """
    Operators B_k with rho = sum_k c_k B_k for c = (r_minus, r_plus, r0, r1, r2, r3)

    B_r_minus is the zero matrix when nu_minus = 0.
    """
    nu = basis.nu
    sigma = basis.sigma if sigma is None else sigma
    fermi = basis.p_minus / nu.nu_minus if nu.nu_minus else np.zeros_like(basis.p_minus)
    para = 2.0 * nu.nu_zero
    return [fermi, basis.p_plus / nu.nu_plus, basis.p_zero / para] + [s / para for s in sigma]


def _coefficients(p: EWPoint) -> np.ndarray:
    return np.array([p.r_minus, p.r_plus, p.r0, p.r1, p.r2, p.r3])


def density_matrix(p: EWPoint, d: int, sigma: Optional[Sigmas] = None) -> DensityMatrix:
    """
    EW density matrix r+ P+/nu+ + r- P-/nu- + (r0 P0 + sum_k r_k Sigma_k)/(2 nu0)

    sigma optionally replaces the canonical Sigma triple (e.g. a rotated one).
    """
    check_point_for_dimension(p, d)
    basis = CommutantBasis.for_dimension(d)
    ops = _coefficient_operators(basis, sigma)
    rho = np.einsum("k,kij->ij", _coefficients(p), np.asarray(ops))
    return DensityMatrix(rho, d)


def derivative_matrices(basis: CommutantBasis, sigma: Optional[Sigmas] = None) -> List[np.ndarray]:
    """Constant d rho / d x for x in (r_minus, r_plus, r1, r2, r3); r_minus dropped at d = 2"""
    fermi, bose, para, *sigma_terms = _coefficient_operators(basis, sigma)
    derivatives = [bose - para] + sigma_terms
    if basis.nu.nu_minus:
        derivatives.insert(0, fermi - para)
    return derivatives


def sd_tensor_direct(p: EWPoint, d: int, sigma: Optional[Sigmas] = None) -> MetricTensor:
    """
    SD metric from the eigendecomposition of rho

    g_ij = 2 sum_{a,b} Re[<a|d_i rho|b><b|d_j rho|a>] / (lambda_a + lambda_b)

    Raises:
        DegenerateSpectrum: some lambda_a + lambda_b falls below the threshold
    """
    rho = density_matrix(p, d, sigma)
    basis = CommutantBasis.for_dimension(d)
    eigenvalues, U = np.linalg.eigh(rho.matrix)

    pair_sums = eigenvalues[:, None] + eigenvalues[None, :]
    smallest = float(pair_sums.min())
    if smallest < settings.degenerate_threshold:
        raise DegenerateSpectrum(f"eigenvalue pair sum {smallest:.3g} below {settings.degenerate_threshold:g}")
    weights = 1.0 / pair_sums

    rotated = [U.conj().T @ D @ U for D in derivative_matrices(basis, sigma)]
    k = len(rotated)
    g = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            g[i, j] = g[j, i] = 2.0 * float(np.sum(rotated[i] * rotated[j].T * weights).real)

    labels = CARTESIAN_LABELS if basis.nu.nu_minus else CARTESIAN_LABELS[1:]
    return MetricTensor(labels, g)


def _hermitian_sqrt(matrix: np.ndarray, name: str) -> np.ndarray:
    eigenvalues, U = np.linalg.eigh(matrix)
    if eigenvalues[0] < -settings.psd_tolerance:
        raise InvalidParameters(f"{name} is not positive semidefinite (min eigenvalue {eigenvalues[0]:.3g})")
    root = np.sqrt(np.clip(eigenvalues, 0.0, None))
    return (U * root) @ U.conj().T


def fidelity_bures(rho1: DensityMatrix, rho2: DensityMatrix) -> Tuple[float, float]:
    """
    Uhlmann fidelity F = (tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2 and Bures distance squared 2 - 2 sqrt(F)

    Returns:
        (F, dB2)
    """
    if rho1.matrix.shape != rho2.matrix.shape:
        raise InvalidParameters(f"dimension mismatch: {rho1.matrix.shape} vs {rho2.matrix.shape}")
    root1 = _hermitian_sqrt(rho1.matrix, "rho1")
    _hermitian_sqrt(rho2.matrix, "rho2")
    inner = root1 @ rho2.matrix @ root1
    inner = 0.5 * (inner + inner.conj().T)
    affinity = float(np.sum(np.sqrt(np.clip(np.linalg.eigvalsh(inner), 0.0, None))))
    affinity = min(affinity, 1.0)
    return affinity ** 2, 2.0 - 2.0 * affinity


def partial_transpose(matrix: np.ndarray, d: int) -> np.ndarray:
    """Transpose on the first tensor factor of (C^d) x (C^d x C^d)"""
    rest = d * d
    blocks = np.asarray(matrix).reshape(d, rest, d, rest)
    return blocks.transpose(2, 1, 0, 3).reshape(d ** 3, d ** 3)


def partial_transpose_min_eig(p: EWPoint, d: int) -> float:
    """Smallest eigenvalue of rho^(T_1); the point is PPT iff this is >= -psd_tolerance"""
    rho = density_matrix(p, d)
    return float(np.linalg.eigvalsh(partial_transpose(rho.matrix, d))[0])


def is_ppt(p: EWPoint, d: int, tol: Optional[float] = None) -> bool:
    tol = settings.psd_tolerance if tol is None else tol
    return partial_transpose_min_eig(p, d) >= -tol


@lru_cache(maxsize=None)
def partial_transpose_table(d: int) -> np.ndarray:
    """
    Partially transposed coefficient operators, stacked as (6, d^3, d^3)

    rho^(T_1) = sum_k c_k table[k] for c = (r_minus, r_plus, r0, r1, r2, r3).
    """
    basis = CommutantBasis.for_dimension(d)
    table = np.asarray([partial_transpose(op, d) for op in _coefficient_operators(basis)])
    table.setflags(write=False)
    return table


def ppt_min_eig_batch(points: np.ndarray, d: int, block: int = 512) -> np.ndarray:
    """
    Minimum partial-transpose eigenvalue for each row of an (N, 5) point array

    Rows are assumed valid; at d = 2 r_minus must be 0.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    table = partial_transpose_table(d)
    if not CommutantBasis.for_dimension(d).nu.nu_minus and np.any(points[:, 0] != 0):
        raise InvalidParameters(f"d={d} has no Fermi sector; r_minus must be 0")
    coefficients = np.column_stack([
        points[:, 0], points[:, 1], 1.0 - points[:, 0] - points[:, 1], points[:, 2], points[:, 3], points[:, 4],
    ])
    result = np.empty(len(points))
    for start in range(0, len(points), block):
        chunk = coefficients[start:start + block]
        matrices = np.einsum("nk,kij->nij", chunk, table)
        result[start:start + block] = np.linalg.eigvalsh(matrices)[:, 0]
    return result


def twirl(rho: DensityMatrix) -> EWPoint:
    """Project an arbitrary tripartite state onto the EW family"""
    rho.check_state()
    basis = CommutantBasis.for_dimension(rho.d)

    def expectation(op: np.ndarray) -> float:
        return float(np.einsum("ij,ji->", rho.matrix, op).real)

    r_minus = expectation(basis.p_minus) if basis.nu.nu_minus else 0.0
    r_plus = expectation(basis.p_plus)
    r1, r2, r3 = (expectation(s) for s in basis.sigma)
    logger.debug(f"twirl d={rho.d}: r_minus={r_minus:.6g} r_plus={r_plus:.6g} r=({r1:.6g}, {r2:.6g}, {r3:.6g})")
    return EWPoint(r_minus=max(r_minus, 0.0), r_plus=max(r_plus, 0.0), r1=r1, r2=r2, r3=r3)


def random_density_matrix(d: int, rng: np.random.Generator, rank: Optional[int] = None) -> DensityMatrix:
    """Ginibre-ensemble state G G^dagger / tr(G G^dagger) of the given rank (full by default)"""
    dim = d ** 3
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise InvalidParameters(f"rank must lie in [1, {dim}], got {rank}")
    G = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = G @ G.conj().T
    return DensityMatrix(rho / np.trace(rho).real, d)


def max_relative_deviation(a: Sequence[float], b: Sequence[float], floor: float = 1.0) -> float:
    """max |a - b| / max(|b|, floor), componentwise"""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), floor)))
