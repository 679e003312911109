import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from src.config.settings import settings
from src.geometry.metric import VolumeElementCase
from src.utils.exceptions import InvalidParameters
from src.utils.validators import valid_mask

# analytic fraction of the sampling box occupied by valid points
ACCEPTANCE_RATES = {
    VolumeElementCase.GENERAL: math.pi / 120.0,
    VolumeElementCase.QUBIT: math.pi / 24.0,
}


@dataclass(frozen=True)
class Chunking:
    """Split of n_raw draws into fixed-size chunks; the split, not the worker count, defines the stream"""

    n_raw: int
    chunk_size: int

    def __post_init__(self):
        if self.n_raw < 1:
            raise InvalidParameters(f"n_raw must be at least 1, got {self.n_raw}")
        if self.chunk_size < 1:
            raise InvalidParameters(f"chunk_size must be at least 1, got {self.chunk_size}")

    @property
    def n_chunks(self) -> int:
        return -(-self.n_raw // self.chunk_size)

    def sizes(self) -> List[int]:
        full, rest = divmod(self.n_raw, self.chunk_size)
        return [self.chunk_size] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class AcceptanceStats:
    n_raw: int
    n_accepted: int

    @property
    def rate(self) -> float:
        return self.n_accepted / self.n_raw if self.n_raw else 0.0

    def __add__(self, other: "AcceptanceStats") -> "AcceptanceStats":
        return AcceptanceStats(self.n_raw + other.n_raw, self.n_accepted + other.n_accepted)


def chunk_rng(seed: int, subsample: int, chunk: int) -> np.random.Generator:
    """Counter-based stream for one chunk; independent of the process that runs it"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, subsample, chunk])))


def draw_box(rng: np.random.Generator, n: int, case: VolumeElementCase) -> np.ndarray:
    """
    n uniform draws on the sampling box as an (n, 5) array

    r_minus, r_plus from [0, 1] and r1, r2, r3 from [-1, 1]; the qubit case
    fixes r_minus = 0.
    """
    case = VolumeElementCase(case)
    points = np.empty((n, 5))
    if case is VolumeElementCase.QUBIT:
        points[:, 0] = 0.0
        points[:, 1] = rng.random(n)
    else:
        points[:, :2] = rng.random((n, 2))
    points[:, 2:] = rng.uniform(-1.0, 1.0, (n, 3))
    return points


def sample_chunk(case: VolumeElementCase, n: int, seed: int, subsample: int, chunk: int) -> np.ndarray:
    """Accepted (valid) points of one chunk"""
    points = draw_box(chunk_rng(seed, subsample, chunk), n, case)
    return points[valid_mask(points)]


def iter_accepted(
    case: VolumeElementCase,
    n_raw: int,
    seed: int,
    chunk_size: Optional[int] = None,
    subsample: int = 0,
) -> Iterator[Tuple[int, np.ndarray, AcceptanceStats]]:
    """Yield (chunk index, accepted points, chunk stats) in chunk order"""
    chunking = Chunking(n_raw, chunk_size or settings.chunk_size)
    for index, size in enumerate(chunking.sizes()):
        accepted = sample_chunk(case, size, seed, subsample, index)
        yield index, accepted, AcceptanceStats(size, len(accepted))


def sample_ew(
    case: VolumeElementCase,
    n_raw: int,
    seed: int,
    chunk_size: Optional[int] = None,
    subsample: int = 0,
) -> Tuple[np.ndarray, AcceptanceStats]:
    """
    Rejection-sample EW points from the uniform box

    Returns:
        (accepted points as an (N, 5) array, acceptance statistics)
    """
    batches = []
    stats = AcceptanceStats(0, 0)
    for _, accepted, chunk_stats in iter_accepted(case, n_raw, seed, chunk_size, subsample):
        batches.append(accepted)
        stats = stats + chunk_stats
    return np.concatenate(batches) if batches else np.empty((0, 5)), stats


def acceptance_reference(case: VolumeElementCase, n_raw: Optional[int] = None) -> Tuple[float, Optional[float]]:
    """
    Analytic acceptance rate (pi/120 general, pi/24 qubit) and its binomial
    standard error for n_raw draws
    """
    rate = ACCEPTANCE_RATES[VolumeElementCase(case)]
    if n_raw is None:
        return rate, None
    return rate, math.sqrt(rate * (1.0 - rate) / n_raw)
