from dataclasses import dataclass
from typing import Iterator, NamedTuple, Tuple

import numpy as np

from src.core.point import EWPoint
from src.utils.exceptions import InvalidParameters
from src.utils.validators import validate_with_slack


@dataclass(frozen=True)
class Multiplicities:
    """Eigenvalue multiplicities of an EW state on (C^d)^(x3); nu_plus + nu_minus + 2 nu_zero = d^3"""

    nu_plus: int
    nu_minus: int
    nu_zero: int
    d: int

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.nu_plus, self.nu_minus, self.nu_zero)


class SpectrumEntry(NamedTuple):
    eigenvalue: float
    multiplicity: int


@dataclass(frozen=True)
class Spectrum:
    entries: Tuple[SpectrumEntry, ...]

    def __iter__(self) -> Iterator[SpectrumEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def weighted_sum(self) -> float:
        return float(sum(e.eigenvalue * e.multiplicity for e in self.entries))

    def total_multiplicity(self) -> int:
        return sum(e.multiplicity for e in self.entries)

    def min_eigenvalue(self) -> float:
        return min(e.eigenvalue for e in self.entries)

    def expanded(self) -> np.ndarray:
        """All d^3 eigenvalues, sorted ascending"""
        return np.sort(np.concatenate([np.full(e.multiplicity, e.eigenvalue) for e in self.entries]))


def multiplicities(d: int) -> Multiplicities:
    """
    Dimensions of the Bose, Fermi and (half the) para sectors

    nu_plus = C(d+2, 3), nu_minus = C(d, 3), nu_zero = (d^3 - d) / 3
    """
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 2:
        raise InvalidParameters(f"subsystem dimension must be an integer >= 2, got {d!r}")
    d = int(d)
    return Multiplicities(
        nu_plus=(d ** 3 + 3 * d ** 2 + 2 * d) // 6,
        nu_minus=(d ** 3 - 3 * d ** 2 + 2 * d) // 6,
        nu_zero=(d ** 3 - d) // 3,
        d=d,
    )


def check_point_for_dimension(p: EWPoint, d: int) -> Multiplicities:
    """Shared precondition of spectrum() and the matrix oracle"""
    nu = multiplicities(d)
    result = validate_with_slack(p)
    if not result.valid:
        raise InvalidParameters("invalid EW point: " + "; ".join(result.violations))
    if nu.nu_minus == 0 and p.r_minus != 0.0:
        raise InvalidParameters(f"d={d} has no Fermi sector; r_minus must be 0 (got {p.r_minus!r})")
    return nu


def spectrum(p: EWPoint, d: int) -> Spectrum:
    """Eigenvalues r+/nu+, r-/nu-, (r0 +- R)/(2 nu0) with their multiplicities"""
    nu = check_point_for_dimension(p, d)
    R = p.R
    entries = [SpectrumEntry(p.r_plus / nu.nu_plus, nu.nu_plus)]
    if nu.nu_minus > 0:
        entries.append(SpectrumEntry(p.r_minus / nu.nu_minus, nu.nu_minus))
    entries.append(SpectrumEntry((p.r0 + R) / (2 * nu.nu_zero), nu.nu_zero))
    entries.append(SpectrumEntry((p.r0 - R) / (2 * nu.nu_zero), nu.nu_zero))
    return Spectrum(tuple(entries))


def maximally_mixed(d: int) -> EWPoint:
    """The EW point of I / d^3"""
    nu = multiplicities(d)
    return EWPoint(r_minus=nu.nu_minus / d ** 3, r_plus=nu.nu_plus / d ** 3)
