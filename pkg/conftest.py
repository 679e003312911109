import numpy as np
import pytest
from loguru import logger

from src.core.point import EWPoint
from src.geometry.metric import VolumeElementCase
from src.montecarlo.sampler import sample_ew


@pytest.fixture(autouse=True)
def quiet_logs():
    logger.remove()
    yield


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(1234)))


def interior_points(n, case=VolumeElementCase.GENERAL, margin=0.02, seed=99):
    """n sampled EW points at least margin away from the singular set"""
    candidates, _ = sample_ew(case, 400_000, seed, chunk_size=100_000)
    r0 = 1.0 - candidates[:, 0] - candidates[:, 1]
    R = np.linalg.norm(candidates[:, 2:], axis=1)
    keep = (r0 - R > margin) & (candidates[:, 1] > margin)
    if case is VolumeElementCase.GENERAL:
        keep &= candidates[:, 0] > margin
    chosen = candidates[keep][:n]
    assert len(chosen) == n
    return [EWPoint.from_array(x) for x in chosen]


@pytest.fixture
def general_points():
    return interior_points(20)


@pytest.fixture
def qubit_points():
    return interior_points(20, VolumeElementCase.QUBIT)


@pytest.fixture
def paradox_point():
    return EWPoint(r_minus=0.1, r_plus=0.27, r1=0.589304, r2=0.08100014, r3=-0.138433)


@pytest.fixture
def make_points():
    return interior_points
