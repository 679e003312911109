import itertools
import math
import threading
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
from loguru import logger

from src.config.settings import settings
from src.core.spectrum import Multiplicities, multiplicities
from src.utils.exceptions import ConsistencyError, InvalidParameters

# pi as the image tuple (pi(1), pi(2), pi(3)), zero-based
S3_ELEMENTS: Dict[str, Tuple[int, int, int]] = {
    "e": (0, 1, 2),
    "(12)": (1, 0, 2),
    "(13)": (2, 1, 0),
    "(23)": (0, 2, 1),
    "(123)": (1, 2, 0),
    "(132)": (2, 0, 1),
}


def permutation_sign(perm: Tuple[int, ...]) -> int:
    inversions = sum(1 for i, j in itertools.combinations(range(len(perm)), 2) if perm[i] > perm[j])
    return -1 if inversions % 2 else 1


def _check_dimension(d: int) -> int:
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)):
        raise InvalidParameters(f"subsystem dimension must be an integer, got {d!r}")
    if not 2 <= d <= settings.max_oracle_dimension:
        raise InvalidParameters(f"oracle supports 2 <= d <= {settings.max_oracle_dimension}, got {d}")
    return int(d)


def permutation_operator(perm: Tuple[int, int, int], d: int) -> np.ndarray:
    """V_pi |i1, i2, i3> = |i_{pi^-1(1)}, i_{pi^-1(2)}, i_{pi^-1(3)}> as a d^3 x d^3 0/1 matrix"""
    dim = d ** 3
    inverse = np.argsort(perm)
    digits = np.indices((d, d, d)).reshape(3, -1)
    target = np.ravel_multi_index(tuple(digits[inverse]), (d, d, d))
    V = np.zeros((dim, dim))
    V[target, np.arange(dim)] = 1.0
    return V


def permutation_operators(d: int) -> Dict[str, np.ndarray]:
    """The six operators V_pi, keyed by cycle notation"""
    d = _check_dimension(d)
    return {name: permutation_operator(perm, d) for name, perm in S3_ELEMENTS.items()}


def projectors(d: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bose, Fermi and para projectors (P_plus, P_minus, P_zero)"""
    return _projectors_from(permutation_operators(d))


def _projectors_from(ops: Dict[str, np.ndarray]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    total = sum(ops.values())
    alternating = sum(permutation_sign(S3_ELEMENTS[name]) * V for name, V in ops.items())
    p_plus = total / 6.0
    p_minus = alternating / 6.0
    p_zero = np.eye(len(p_plus)) - p_plus - p_minus
    return p_plus, p_minus, p_zero


def _sigmas_from(ops: Dict[str, np.ndarray], p_zero: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    sigma3 = (p_zero @ ops["(12)"] @ p_zero).astype(complex)
    sigma1 = (2.0 * (p_zero @ ops["(23)"] @ p_zero) + sigma3) / math.sqrt(3.0)
    sigma2 = 0.5j * (sigma1 @ sigma3 - sigma3 @ sigma1)
    return sigma1, sigma2, sigma3


def sigma_operators(d: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pauli-like triple on the para subspace; carries the Bloch parameters r1, r2, r3"""
    return CommutantBasis.for_dimension(d).sigma


@dataclass(frozen=True)
class CommutantBasis:
    """
    Operator basis of the S3 x U(d)^(x3) commutant for one subsystem dimension

    Immutable once built; instances come from for_dimension(), which caches
    one basis per d.
    """

    d: int
    permutations: Dict[str, np.ndarray] = field(repr=False)
    p_plus: np.ndarray = field(repr=False)
    p_minus: np.ndarray = field(repr=False)
    p_zero: np.ndarray = field(repr=False)
    sigma: Tuple[np.ndarray, np.ndarray, np.ndarray] = field(repr=False)
    nu: Multiplicities = None

    _cache = {}
    _lock = threading.Lock()

    @classmethod
    def build(cls, d: int) -> "CommutantBasis":
        d = _check_dimension(d)
        ops = permutation_operators(d)
        p_plus, p_minus, p_zero = _projectors_from(ops)
        sigma = _sigmas_from(ops, p_zero)
        for array in [*ops.values(), p_plus, p_minus, p_zero, *sigma]:
            array.setflags(write=False)
        basis = cls(d, ops, p_plus, p_minus, p_zero, sigma, multiplicities(d))
        basis.check_invariants()
        return basis

    @classmethod
    def for_dimension(cls, d: int) -> "CommutantBasis":
        basis = cls._cache.get(d)
        if basis is not None:
            return basis
        with cls._lock:
            basis = cls._cache.get(d)
            if basis is None:
                logger.debug(f"building commutant basis for d={d} ({d ** 3}x{d ** 3})")
                basis = cls.build(d)
                cls._cache[d] = basis
        return basis

    @property
    def dim(self) -> int:
        return self.d ** 3

    def check_invariants(self, atol: float = 1e-12):
        """Raise ConsistencyError if any algebraic identity of the basis fails"""
        failures = []

        def close(a, b) -> bool:
            return np.allclose(a, b, rtol=0.0, atol=atol)

        P = {"P+": self.p_plus, "P-": self.p_minus, "P0": self.p_zero}
        expected_traces = {"P+": self.nu.nu_plus, "P-": self.nu.nu_minus, "P0": 2 * self.nu.nu_zero}
        for name, proj in P.items():
            if not close(proj @ proj, proj):
                failures.append(f"{name} is not idempotent")
            if abs(np.trace(proj) - expected_traces[name]) > atol * self.dim:
                failures.append(f"trace({name}) = {np.trace(proj).real!r}, expected {expected_traces[name]}")
        for (na, a), (nb, b) in itertools.combinations(P.items(), 2):
            if not close(a @ b, 0.0):
                failures.append(f"{na} {nb} != 0")

        for i, s in enumerate(self.sigma, start=1):
            if not close(s, s.conj().T):
                failures.append(f"Sigma{i} is not Hermitian")
            if abs(np.trace(s)) > atol * self.dim:
                failures.append(f"Sigma{i} is not traceless")
            if not close(self.p_zero @ s @ self.p_zero, s):
                failures.append(f"Sigma{i} leaves the para subspace")
        for i, j in itertools.combinations_with_replacement(range(3), 2):
            anti = self.sigma[i] @ self.sigma[j] + self.sigma[j] @ self.sigma[i]
            target = 2.0 * self.p_zero if i == j else 0.0
            if not close(anti, target):
                failures.append(f"{{Sigma{i + 1}, Sigma{j + 1}}} != {'2 P0' if i == j else '0'}")

        if failures:
            raise ConsistencyError(f"commutant basis for d={self.d} failed: " + "; ".join(failures))

    def rotated(self, O: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sigma'_i = sum_j O[j, i] Sigma_j for an orthogonal 3x3 O"""
        O = np.asarray(O, dtype=float)
        return tuple(sum(O[j, i] * self.sigma[j] for j in range(3)) for i in range(3))
