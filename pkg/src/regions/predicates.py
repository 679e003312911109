from pathlib import Path
from typing import Optional, Protocol, Union, runtime_checkable

import numpy as np

from src.config.settings import settings
from src.core.point import EWPoint
from src.geometry.metric import VolumeElementCase
from src.oracle.density import partial_transpose_min_eig, ppt_min_eig_batch
from src.regions.spec import SHIPPED_SPECS, RegionSpec, load_region_spec, shipped_spec
from src.utils.exceptions import InvalidParameters
from src.utils.validators import valid_mask, validate

PPT_ORACLE = "ppt-oracle"
ALL_STATES = "all"


@runtime_checkable
class Region(Protocol):
    """Anything samplers, the boundary estimator and the rasterizer can test points against"""

    name: str
    case: VolumeElementCase
    necessary_only: bool

    def contains(self, points: np.ndarray) -> np.ndarray:
        ...

    def slacks(self, points: np.ndarray) -> np.ndarray:
        ...


def _as_points(points: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(points, dtype=float))


def _state_mask(points: np.ndarray, case: VolumeElementCase) -> np.ndarray:
    mask = valid_mask(points)
    if case is VolumeElementCase.QUBIT:
        mask &= points[:, 0] == 0.0
    return mask


class PolynomialRegion:
    """Region given by a RegionSpec; closed (ties are members)"""

    def __init__(self, spec: RegionSpec):
        self.spec = spec
        self.name = spec.name
        self.case = spec.case
        self.necessary_only = spec.necessary_only

    @property
    def constraints(self):
        return self.spec.constraints

    def slacks(self, points: np.ndarray) -> np.ndarray:
        return self.spec.slacks(_as_points(points))

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = _as_points(points)
        return _state_mask(points, self.case) & np.all(self.slacks(points) >= 0.0, axis=1)


class PPTRegion:
    """Positive partial transpose on the first factor, decided from the explicit matrix"""

    necessary_only = False

    def __init__(self, d: int, tol: Optional[float] = None):
        self.d = d
        self.tol = settings.psd_tolerance if tol is None else tol
        self.name = PPT_ORACLE
        self.case = VolumeElementCase.QUBIT if d == 2 else VolumeElementCase.GENERAL

    def slacks(self, points: np.ndarray) -> np.ndarray:
        points = _as_points(points)
        return (ppt_min_eig_batch(points, self.d) + self.tol)[:, None]

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = _as_points(points)
        mask = _state_mask(points, self.case)
        if mask.any():
            mask[mask] = self.slacks(points[mask])[:, 0] >= 0.0
        return mask


class AllStates:
    """Every valid point; the normalizing region"""

    necessary_only = False

    def __init__(self, case: VolumeElementCase = VolumeElementCase.GENERAL):
        self.name = ALL_STATES
        self.case = VolumeElementCase(case)

    def slacks(self, points: np.ndarray) -> np.ndarray:
        return np.zeros((len(_as_points(points)), 0))

    def contains(self, points: np.ndarray) -> np.ndarray:
        return _state_mask(_as_points(points), self.case)


class Complement:
    """Valid points outside another region"""

    necessary_only = False

    def __init__(self, region: Region):
        self.region = region
        self.name = f"not-{region.name}"
        self.case = region.case

    def slacks(self, points: np.ndarray) -> np.ndarray:
        return -self.region.slacks(points)

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = _as_points(points)
        return _state_mask(points, self.case) & ~self.region.contains(points)


class Intersection:
    """Points in every one of several regions"""

    def __init__(self, *regions: Region):
        if not regions:
            raise InvalidParameters("intersection needs at least one region")
        self.regions = regions
        self.name = "&".join(r.name for r in regions)
        self.case = regions[0].case
        self.necessary_only = any(r.necessary_only for r in regions)

    def slacks(self, points: np.ndarray) -> np.ndarray:
        return np.column_stack([r.slacks(points) for r in self.regions])

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = _as_points(points)
        mask = _state_mask(points, self.case)
        for region in self.regions:
            if not mask.any():
                break
            mask[mask] = region.contains(points[mask])
        return mask


def eval_region(spec: RegionSpec, p: EWPoint) -> bool:
    """validate(p) and every constraint of spec"""
    if not validate(p, qubit=spec.case is VolumeElementCase.QUBIT).valid:
        return False
    return bool(np.all(spec.slacks(p.as_array()) >= 0.0))


def triseparable_shipped(p: EWPoint, extra: Optional[RegionSpec] = None) -> bool:
    """
    Quoted triseparability bounds, the Bloch-radius constraint and any extra loaded constraints

    Without the full constraint set this is a necessary condition only.
    """
    spec = shipped_spec("trisep_quoted")
    if extra is not None:
        spec = spec.extended(extra)
    return eval_region(spec, p)


def ppt_oracle(p: EWPoint, d: int) -> bool:
    result = validate(p)
    if not result.valid:
        raise InvalidParameters("invalid EW point: " + "; ".join(result.violations))
    return partial_transpose_min_eig(p, d) >= -settings.psd_tolerance


def resolve_region(name: Union[str, Path], case: VolumeElementCase, d: Optional[int] = None) -> Region:
    """
    Region from a CLI-style name: "ppt-oracle", "all", a shipped spec name or a spec file path

    The PPT oracle runs at d = 2 for the qubit case and d = 3 otherwise unless d is given.
    """
    case = VolumeElementCase(case)
    if str(name) == PPT_ORACLE:
        return PPTRegion(d or (2 if case is VolumeElementCase.QUBIT else 3))
    if str(name) == ALL_STATES:
        return AllStates(case)
    spec = shipped_spec(str(name)) if str(name) in SHIPPED_SPECS else load_region_spec(Path(name))
    if spec.case is not case:
        raise InvalidParameters(f"region '{spec.name}' is a {spec.case.value}-case spec, requested {case.value}")
    return PolynomialRegion(spec)
