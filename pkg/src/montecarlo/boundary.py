from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from loguru import logger
from scipy.optimize import brentq

from src.config.settings import settings
from src.geometry.metric import VolumeElementCase, boundary_h_batch, volume_element_batch
from src.montecarlo.sampler import Chunking, chunk_rng
from src.regions.predicates import PolynomialRegion, Region
from src.schemas.reports import (
    BoundaryAreaReport,
    BoundaryRegionTally,
    CaseName,
    LabeledValue,
    Provenance,
)
from src.utils.exceptions import InvalidParameters, NonConvergence
from src.utils.validators import valid_mask

SAMPLING_MODES = ("cube", "ball")
SATURATION_TOLERANCE = 1e-9
SCAN_POINTS = 64

BOUNDARY_REFERENCES = {
    VolumeElementCase.QUBIT: [
        LabeledValue(name="triseparable / biseparable boundary area", value=0.34398, provenance=Provenance.PAPER,
                     note="full constraint sets"),
    ],
    VolumeElementCase.GENERAL: [
        LabeledValue(name="triseparable / biseparable boundary area", value=0.0949602, provenance=Provenance.PAPER,
                     note="full constraint sets"),
        LabeledValue(name="triseparable / PPT boundary area", value=0.0000105263, provenance=Provenance.PAPER,
                     note="full constraint sets"),
    ],
}


def saturation_column(case: VolumeElementCase) -> int:
    """r_plus is solved for in the qubit case, r_minus otherwise"""
    return 1 if VolumeElementCase(case) is VolumeElementCase.QUBIT else 0


def draw_boundary_base(rng: np.random.Generator, n: int, case: VolumeElementCase, sampling: str) -> np.ndarray:
    """
    (n, 5) draws with the saturation coordinate left at 0

    The Bloch vector comes from the cube [-1, 1]^3 filtered to the unit ball
    ("cube") or uniformly from the unit ball ("ball"); the general case also
    draws r_plus from [0, 1].
    """
    if sampling not in SAMPLING_MODES:
        raise InvalidParameters(f"sampling must be one of {SAMPLING_MODES}, got {sampling!r}")
    points = np.zeros((n, 5))
    if VolumeElementCase(case) is VolumeElementCase.GENERAL:
        points[:, 1] = rng.random(n)
    if sampling == "cube":
        points[:, 2:] = rng.uniform(-1.0, 1.0, (n, 3))
        return points[np.einsum("ij,ij->i", points[:, 2:], points[:, 2:]) <= 1.0]
    direction = rng.standard_normal((n, 3))
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    points[:, 2:] = direction * np.cbrt(rng.random(n))[:, None]
    return points


def _saturation_range(base: np.ndarray, case: VolumeElementCase) -> Tuple[np.ndarray, np.ndarray]:
    if VolumeElementCase(case) is VolumeElementCase.QUBIT:
        return np.zeros(len(base)), np.ones(len(base))
    return np.zeros(len(base)), 1.0 - base[:, 1]


def _polynomial_roots(coefficients: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Real roots of rows of a degree <= 2 coefficient array

    Returns:
        (row indices, roots), a row appearing once per root
    """
    degree = coefficients.shape[1] - 1
    c0 = coefficients[:, 0]
    c1 = coefficients[:, 1] if degree >= 1 else np.zeros_like(c0)
    c2 = coefficients[:, 2] if degree >= 2 else np.zeros_like(c0)
    rows, roots = [], []

    linear = (c2 == 0.0) & (c1 != 0.0)
    idx = np.flatnonzero(linear)
    rows.append(idx)
    roots.append(-c0[idx] / c1[idx])

    quad = c2 != 0.0
    disc = c1 * c1 - 4.0 * c2 * c0
    idx = np.flatnonzero(quad & (disc >= 0.0))
    if len(idx):
        sqrt_disc = np.sqrt(disc[idx])
        q = -0.5 * (c1[idx] + np.where(c1[idx] >= 0.0, sqrt_disc, -sqrt_disc))
        first = q / c2[idx]
        nonzero = q != 0.0
        rows += [idx, idx[nonzero]]
        roots += [first, c0[idx][nonzero] / q[nonzero]]
    return np.concatenate(rows), np.concatenate(roots)


def _scan_roots(func: Callable[[float], float], lo: float, hi: float, values: np.ndarray) -> List[float]:
    """Sign changes of func on a uniform grid, refined by brentq"""
    grid = np.linspace(lo, hi, len(values))
    roots = []
    for k in range(len(grid) - 1):
        fa, fb = values[k], values[k + 1]
        if fa == 0.0:
            roots.append(float(grid[k]))
        elif fa * fb < 0.0:
            roots.append(float(brentq(func, grid[k], grid[k + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def _with_saturation(base: np.ndarray, column: int, rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    points = base[rows].copy()
    points[:, column] = x
    return points


def saturation_points(region: Region, base: np.ndarray, case: VolumeElementCase) -> np.ndarray:
    """
    Points where one of the region's constraints is saturated by the saturation
    coordinate and every other constraint holds
    """
    column = saturation_column(case)
    lo, hi = _saturation_range(base, case)
    candidates = []

    closed_form = isinstance(region, PolynomialRegion) and all(c.degree_in(column) <= 2 for c in region.constraints)
    if closed_form:
        for constraint in region.constraints:
            if constraint.degree_in(column) == 0:
                continue
            rows, x = _polynomial_roots(constraint.univariate_coefficients(base, column))
            candidates.append(_with_saturation(base, column, rows, x))
    else:
        # all constraints at once on a grid, brentq inside each bracket
        grid = np.linspace(0.0, 1.0, SCAN_POINTS)
        for i in range(len(base)):
            xs = lo[i] + grid * (hi[i] - lo[i])
            stacked = np.repeat(base[i:i + 1], SCAN_POINTS, axis=0)
            stacked[:, column] = xs
            table = region.slacks(stacked)
            for k in range(table.shape[1]):
                def slack_at(x: float, k: int = k) -> float:
                    point = base[i:i + 1].copy()
                    point[0, column] = x
                    return float(region.slacks(point)[0, k])

                roots = _scan_roots(slack_at, lo[i], hi[i], table[:, k])
                if roots:
                    candidates.append(_with_saturation(base, column, np.full(len(roots), i), np.array(roots)))

    if not candidates:
        return np.empty((0, 5))
    points = np.concatenate(candidates)
    points = points[valid_mask(points)]
    if not len(points):
        return points
    feasible = np.all(region.slacks(points) >= -SATURATION_TOLERANCE, axis=1)
    return points[feasible]


@dataclass
class BoundaryTally:
    h_sum: float = 0.0
    count: int = 0
    singular: int = 0


def _tally_boundary(region: Region, base: np.ndarray, case: VolumeElementCase) -> BoundaryTally:
    points = saturation_points(region, base, case)
    _, singular = volume_element_batch(points, case)
    interior = points[~singular]
    h = boundary_h_batch(interior, case) if len(interior) else np.empty(0)
    return BoundaryTally(float(np.sum(h)), len(interior), int(singular.sum()))


def _boundary_chunk(
    regions: Tuple[Region, Region], case: VolumeElementCase, size: int, seed: int, chunk: int, sampling: str
) -> Tuple[BoundaryTally, BoundaryTally]:
    base = draw_boundary_base(chunk_rng(seed, 0, chunk), size, case, sampling)
    return tuple(_tally_boundary(region, base, case) for region in regions)


def boundary_area_ratio(
    region_a: Region,
    region_b: Region,
    case: VolumeElementCase,
    n: int,
    seed: Optional[int] = None,
    sampling: str = "cube",
    chunk_size: Optional[int] = None,
    workers: Optional[int] = None,
) -> BoundaryAreaReport:
    """
    Ratio of the SD boundary areas of two regions, estimated from saturation points

    For every random draw of the non-saturation coordinates, each constraint is
    solved for the saturation coordinate (r_plus for qubits, r_minus otherwise);
    roots satisfying the region's other constraints contribute h, the square root
    of the determinant of the boundary sub-tensor. Both regions use the same draws.

    Raises:
        NonConvergence: the denominator region produced no saturation points
    """
    case = VolumeElementCase(case)
    seed = settings.default_seed if seed is None else seed
    workers = settings.default_workers if workers is None else workers
    chunking = Chunking(n, chunk_size or settings.chunk_size)
    logger.info(f"boundary areas of '{region_a.name}' and '{region_b.name}' from {n} {sampling} draws")

    tallies = Parallel(n_jobs=workers)(
        delayed(_boundary_chunk)((region_a, region_b), case, size, seed, index, sampling)
        for index, size in enumerate(chunking.sizes())
    )
    totals = [BoundaryTally(), BoundaryTally()]
    for pair in tallies:
        for total, tally in zip(totals, pair):
            total.h_sum += tally.h_sum
            total.count += tally.count
            total.singular += tally.singular

    if totals[1].count == 0 or totals[1].h_sum <= 0.0:
        raise NonConvergence(f"no saturation points found for '{region_b.name}'; increase the number of draws")
    for region, total in zip((region_a, region_b), totals):
        if total.singular:
            logger.warning(f"'{region.name}': discarded {total.singular} saturation point(s) on the singular set")

    report = BoundaryAreaReport(
        case=CaseName(case.value),
        saturation_variable="r_plus" if saturation_column(case) == 1 else "r_minus",
        sampling=sampling,
        n_draws=n,
        seed=seed,
        numerator=BoundaryRegionTally(region=region_a.name, h_sum=totals[0].h_sum,
                                      saturation_points=totals[0].count, discarded_singular=totals[0].singular),
        denominator=BoundaryRegionTally(region=region_b.name, h_sum=totals[1].h_sum,
                                        saturation_points=totals[1].count, discarded_singular=totals[1].singular),
        ratio=totals[0].h_sum / totals[1].h_sum,
        references=BOUNDARY_REFERENCES[case],
    )
    logger.success(f"boundary area ratio {report.ratio:.7g} ({totals[0].count} / {totals[1].count} saturation points)")
    return report
