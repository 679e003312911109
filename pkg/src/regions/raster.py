from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from src.regions.predicates import PolynomialRegion
from src.regions.spec import RegionSpec, shipped_spec
from src.utils.exceptions import InvalidParameters
from src.utils.validators import valid_mask

AXES = ("r1", "r2", "r3")
MIN_RESOLUTION = 16


class CellLabel(IntEnum):
    OUTSIDE_EW = 0
    EW_ONLY = 1
    REGION_MEMBER = 2
    EXCLUDED_BY_BLOCH = 3  # passes every (r_minus, r_plus) bound, fails a constraint involving r


LABEL_NAMES = {
    CellLabel.OUTSIDE_EW: "outside-EW",
    CellLabel.EW_ONLY: "EW-only",
    CellLabel.REGION_MEMBER: "region-member",
    CellLabel.EXCLUDED_BY_BLOCH: "excluded-by-bloch-constraint",
}

# PGM gray level per label
GRAY_LEVELS = {
    CellLabel.OUTSIDE_EW: 0,
    CellLabel.EW_ONLY: 96,
    CellLabel.REGION_MEMBER: 255,
    CellLabel.EXCLUDED_BY_BLOCH: 176,
}


@dataclass(frozen=True)
class RasterGrid:
    """
    Labeled section of the Bloch ball at fixed (r_minus, r_plus)

    labels[iy, ix] belongs to the cell centered at (centers[ix], centers[iy]) in
    the plane axes; iy grows with the second axis.
    """

    r_minus: float
    r_plus: float
    plane: Tuple[str, str]
    resolution: int
    offset: float
    region: str
    labels: np.ndarray = field(repr=False)
    centers: np.ndarray = field(repr=False)

    @property
    def r0(self) -> float:
        return 1.0 - self.r_minus - self.r_plus

    def counts(self) -> Dict[str, int]:
        values, counts = np.unique(self.labels, return_counts=True)
        found = dict(zip(values.tolist(), counts.tolist()))
        return {LABEL_NAMES[label]: int(found.get(int(label), 0)) for label in CellLabel}

    def cell_points(self) -> np.ndarray:
        """(resolution^2, 5) array of cell-center EW points in labels' row-major order"""
        return _cell_points(self.r_minus, self.r_plus, self.plane, self.centers, self.offset)

    def legend(self) -> Dict[str, Any]:
        return {
            "r_minus": self.r_minus,
            "r_plus": self.r_plus,
            "plane": list(self.plane),
            "fixed_axis_value": self.offset,
            "resolution": self.resolution,
            "extent": [-self.r0, self.r0],
            "region": self.region,
            "labels": {str(int(label)): LABEL_NAMES[label] for label in CellLabel},
            "gray_levels": {LABEL_NAMES[label]: GRAY_LEVELS[label] for label in CellLabel},
            "counts": self.counts(),
            "orientation": "first row of the image is the largest value of the second axis",
        }

    def to_pgm(self) -> str:
        """Plain (P2) PGM text"""
        lut = np.array([GRAY_LEVELS[label] for label in CellLabel])
        image = lut[np.flipud(self.labels)]
        rows = [" ".join(str(v) for v in row) for row in image]
        header = [
            "P2",
            f"# section r_minus={self.r_minus!r} r_plus={self.r_plus!r} plane={self.plane[0]},{self.plane[1]}",
            f"{self.resolution} {self.resolution}",
            "255",
        ]
        return "\n".join(header + rows) + "\n"

    def to_frame(self) -> pd.DataFrame:
        x, y = np.meshgrid(self.centers, self.centers)
        return pd.DataFrame({
            self.plane[0]: x.ravel(),
            self.plane[1]: y.ravel(),
            "label": self.labels.ravel(),
            "label_name": [LABEL_NAMES[CellLabel(v)] for v in self.labels.ravel()],
        })


def _cell_points(r_minus: float, r_plus: float, plane: Tuple[str, str], centers: np.ndarray, offset: float) -> np.ndarray:
    x, y = np.meshgrid(centers, centers)
    n = x.size
    points = np.zeros((n, 5))
    points[:, 0] = r_minus
    points[:, 1] = r_plus
    third = next(axis for axis in AXES if axis not in plane)
    points[:, 2 + AXES.index(plane[0])] = x.ravel()
    points[:, 2 + AXES.index(plane[1])] = y.ravel()
    points[:, 2 + AXES.index(third)] = offset
    return points


def _depends_on_bloch(constraint) -> bool:
    return any(any(term.exponents[2:]) for term in constraint.terms)


def cross_section_raster(
    r_minus: float,
    r_plus: float,
    plane: Sequence[str] = ("r1", "r2"),
    resolution: int = 512,
    specs: Optional[Sequence[RegionSpec]] = None,
    offset: float = 0.0,
) -> RasterGrid:
    """
    Label a square grid over [-r0, r0]^2 in a plane of the Bloch ball

    Cells outside the ball are outside-EW; inside, a cell is a region member when
    every constraint of the (conjoined) specs holds, excluded-by-bloch-constraint when only
    constraints involving (r1, r2, r3) fail, and EW-only otherwise.

    Args:
        plane: Two distinct axes among r1, r2, r3; the third is fixed at offset
        specs: Region specs, conjoined; defaults to the shipped triseparability spec
    """
    plane = tuple(plane)
    if len(plane) != 2 or plane[0] == plane[1] or any(axis not in AXES for axis in plane):
        raise InvalidParameters(f"plane must name two distinct axes among {AXES}, got {plane}")
    if resolution < MIN_RESOLUTION:
        raise InvalidParameters(f"resolution must be at least {MIN_RESOLUTION}, got {resolution}")
    r0 = 1.0 - r_minus - r_plus
    if r_minus < 0 or r_plus < 0 or r0 <= 0:
        raise InvalidParameters(f"(r_minus, r_plus) = ({r_minus!r}, {r_plus!r}) leaves no Bloch ball")

    specs = list(specs) if specs else [shipped_spec("trisep_quoted")]
    spec = specs[0]
    for other in specs[1:]:
        spec = spec.extended(other)

    centers = -r0 + (np.arange(resolution) + 0.5) * (2.0 * r0 / resolution)
    points = _cell_points(r_minus, r_plus, plane, centers, offset)

    inside = valid_mask(points)
    member = PolynomialRegion(spec).contains(points)
    slacks = spec.slacks(points)
    bloch = np.array([_depends_on_bloch(c) for c in spec.constraints])
    marginal_ok = np.all(slacks[:, ~bloch] >= 0.0, axis=1) if (~bloch).any() else np.ones(len(points), dtype=bool)

    labels = np.full(len(points), int(CellLabel.OUTSIDE_EW), dtype=np.int64)
    labels[inside] = int(CellLabel.EW_ONLY)
    labels[inside & marginal_ok & ~member] = int(CellLabel.EXCLUDED_BY_BLOCH)
    labels[member] = int(CellLabel.REGION_MEMBER)
    labels = labels.reshape(resolution, resolution)

    grid = RasterGrid(r_minus, r_plus, plane, resolution, offset, spec.name, labels, centers)
    logger.info(f"raster {resolution}x{resolution} at (r_minus={r_minus}, r_plus={r_plus}): {grid.counts()}")
    return grid
