import numpy as np
import pandas as pd
import pytest

from src.geometry.metric import VolumeElementCase
from src.montecarlo.boundary import boundary_area_ratio, draw_boundary_base, saturation_points
from src.montecarlo.estimator import (
    conditional_probability,
    estimate_probabilities,
    estimate_probability,
    pooled_stddev,
)
from src.montecarlo.sampler import Chunking, acceptance_reference, chunk_rng, sample_ew
from src.quadrature.integrate import GENERAL_TOTAL
from src.quadrature.targets import run_target
from src.regions.predicates import AllStates, PolynomialRegion, PPTRegion
from src.regions.spec import load_region_spec, shipped_spec
from src.schemas.reports import Provenance, QuadratureTarget
from src.utils.exceptions import InvalidParameters, NonConvergence
from src.utils.validators import valid_mask

GENERAL = VolumeElementCase.GENERAL
QUBIT = VolumeElementCase.QUBIT


def region(name):
    return PolynomialRegion(shipped_spec(name))


def test_chunking():
    assert Chunking(10, 4).sizes() == [4, 4, 2]
    assert Chunking(8, 4).n_chunks == 2
    with pytest.raises(InvalidParameters):
        Chunking(0, 4)
    with pytest.raises(InvalidParameters):
        Chunking(10, 0)


@pytest.mark.parametrize("case", [GENERAL, QUBIT])
def test_acceptance_rate(case):
    n = 1_000_000
    points, stats = sample_ew(case, n, seed=3, chunk_size=250_000)
    rate, stderr = acceptance_reference(case, n)
    assert stats.n_raw == n
    assert stats.n_accepted == len(points)
    assert abs(stats.rate - rate) < 4 * stderr
    assert valid_mask(points).all()
    if case is QUBIT:
        assert np.all(points[:, 0] == 0.0)


def test_chunk_streams_are_independent_of_order():
    a = chunk_rng(7, 1, 3).random(5)
    chunk_rng(7, 1, 2).random(100)
    b = chunk_rng(7, 1, 3).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, chunk_rng(7, 2, 3).random(5))


def test_sample_is_chunk_deterministic():
    first, _ = sample_ew(GENERAL, 100_000, seed=11, chunk_size=30_000)
    second, _ = sample_ew(GENERAL, 100_000, seed=11, chunk_size=30_000)
    np.testing.assert_array_equal(first, second)


def test_estimate_is_deterministic_across_workers():
    kwargs = dict(subsamples=2, n_raw_per=200_000, seed=5, chunk_size=50_000)
    serial = estimate_probability(region("bisep_necessary"), GENERAL, workers=1, **kwargs)
    again = estimate_probability(region("bisep_necessary"), GENERAL, workers=1, **kwargs)
    parallel = estimate_probability(region("bisep_necessary"), GENERAL, workers=2, **kwargs)
    assert serial.model_dump() == again.model_dump()
    assert serial.model_dump() == parallel.model_dump()


def test_all_states_has_probability_one():
    report = estimate_probability(AllStates(GENERAL), GENERAL, subsamples=2, n_raw_per=100_000, seed=2)
    assert report.probability == pytest.approx(1.0, abs=1e-12)
    assert report.pooled_probability.provenance is Provenance.ESTIMATE
    assert report.pooled_probability.name == "P(all)"
    assert all(r.probability == pytest.approx(1.0, abs=1e-12) for r in report.subsamples)
    assert report.bias_adjusted_stddev == pytest.approx(0.0, abs=1e-12)


def test_bisep_necessary_probability():
    report = estimate_probability(region("bisep_necessary"), GENERAL, subsamples=4, n_raw_per=500_000, seed=17)
    sigma = report.bias_adjusted_stddev
    assert sigma > 0.0
    assert abs(report.probability - 0.825312) <= 3 * sigma
    assert report.necessary_only
    assert report.acceptance_reference.value == pytest.approx(np.pi / 120)
    assert any(v.value == 0.825312 for v in report.references)
    assert len(report.subsamples) == 4
    assert report.chunking.chunk_size > 0


def test_shared_sample_for_several_regions():
    trisep, bisep = estimate_probabilities(
        [region("trisep_quoted"), region("bisep_necessary")], GENERAL, subsamples=2, n_raw_per=200_000, seed=8,
    )
    assert trisep.probability <= bisep.probability
    for t, b in zip(trisep.subsamples, bisep.subsamples):
        assert t.weight_sum == b.weight_sum
        assert t.region_weight_sum <= b.region_weight_sum


def test_conditional_probability_matches_ratio():
    kwargs = dict(subsamples=2, n_raw_per=200_000, seed=21, chunk_size=100_000)
    trisep, bisep = estimate_probabilities([region("trisep_quoted"), region("bisep_necessary")], GENERAL, **kwargs)
    conditional = conditional_probability(region("trisep_quoted"), region("bisep_necessary"), GENERAL, **kwargs)
    assert conditional.given == "bisep_necessary"
    assert conditional.region == "trisep_quoted&bisep_necessary"
    assert conditional.probability == pytest.approx(trisep.probability / bisep.probability, rel=1e-9)
    assert conditional.pooled_probability.name == "P(trisep_quoted&bisep_necessary | bisep_necessary)"
    assert conditional.references == []


def test_qubit_estimate():
    report = estimate_probability(region("trisep_quoted_qubit"), QUBIT, subsamples=2, n_raw_per=100_000, seed=4)
    assert 0.0 < report.probability < 5.0 / 16.0 + 0.05
    assert report.case.value == "qubit"


def test_region_case_mismatch():
    with pytest.raises(InvalidParameters):
        estimate_probability(region("trisep_quoted_qubit"), GENERAL, subsamples=1, n_raw_per=1000)


def test_empty_conditioning_region_does_not_converge():
    empty = PolynomialRegion(load_region_spec({
        "name": "empty",
        "constraints": [{"terms": [[1, [1, 0, 0, 0, 0]]], "rel": ">=", "rhs": 2}],
    }))
    with pytest.raises(NonConvergence):
        estimate_probabilities([region("bisep_necessary")], GENERAL, subsamples=1, n_raw_per=10_000, seed=1,
                               given=empty)


def test_dump_points(tmp_path):
    path = tmp_path / "dump" / "points.csv"
    report = estimate_probability(region("bisep_necessary"), GENERAL, subsamples=2, n_raw_per=20_000, seed=9,
                                  dump_path=path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["r_minus", "r_plus", "r1", "r2", "r3", "weight"]
    assert len(frame) == sum(r.accepted - r.discarded_singular for r in report.subsamples)
    assert (frame["weight"] > 0).all()


def test_pooled_stddev():
    assert pooled_stddev([0.3, 0.3, 0.3]) == 0.0
    assert pooled_stddev([1.0, 2.0, 3.0]) == pytest.approx(1.0)
    assert pooled_stddev([0.0, 1.0]) == pytest.approx(np.sqrt(0.5))
    with pytest.raises(InvalidParameters):
        pooled_stddev([0.5])


def test_boundary_base_sampling(rng):
    cube = draw_boundary_base(rng, 1000, GENERAL, "cube")
    ball = draw_boundary_base(rng, 1000, QUBIT, "ball")
    assert len(ball) == 1000
    assert len(cube) < 1000
    assert np.all(np.linalg.norm(cube[:, 2:], axis=1) <= 1.0)
    assert np.all(ball[:, 1] == 0.0)
    with pytest.raises(InvalidParameters):
        draw_boundary_base(rng, 10, GENERAL, "sphere")


def test_saturation_points_lie_on_the_boundary(rng):
    spec = shipped_spec("trisep_quoted_qubit")
    base = draw_boundary_base(rng, 2000, QUBIT, "cube")
    points = saturation_points(PolynomialRegion(spec), base, QUBIT)
    assert len(points) > 0
    slacks = spec.slacks(points)
    assert np.all(slacks >= -1e-9)
    assert np.all(np.min(np.abs(slacks), axis=1) < 1e-9)


def test_boundary_ratio_of_region_with_itself():
    qubit = region("trisep_quoted_qubit")
    report = boundary_area_ratio(qubit, qubit, QUBIT, n=5000, seed=1, chunk_size=2000)
    assert report.ratio == 1.0
    assert report.saturation_variable == "r_plus"
    assert report.numerator.saturation_points == report.denominator.saturation_points > 0


def test_boundary_ratio_without_saturation_points():
    unreachable = PolynomialRegion(load_region_spec({
        "name": "unreachable", "case": "qubit",
        "constraints": [{"terms": [[1, [0, 1, 0, 0, 0]]], "rel": ">=", "rhs": 2}],
    }))
    with pytest.raises(NonConvergence):
        boundary_area_ratio(region("trisep_quoted_qubit"), unreachable, QUBIT, n=1000, seed=1)


def test_general_boundary_ratio():
    report = boundary_area_ratio(region("trisep_quoted"), region("bisep_necessary"), GENERAL, n=20_000, seed=6)
    assert report.saturation_variable == "r_minus"
    assert report.ratio > 0.0
    assert report.denominator.saturation_points > 0


@pytest.mark.slow
def test_estimate_agrees_with_quadrature():
    quadrature = run_target(QuadratureTarget.TRISEP_SHIPPED_BOUND)
    report = estimate_probability(region("trisep_quoted"), GENERAL, subsamples=5, n_raw_per=2_000_000, seed=31,
                                  workers=2)
    combined = np.hypot(report.bias_adjusted_stddev, quadrature.result.error / GENERAL_TOTAL)
    assert abs(report.probability - quadrature.probability) <= 3 * combined


@pytest.mark.slow
@pytest.mark.parametrize("d,case,published", [(3, GENERAL, 0.0963689), (2, QUBIT, 0.216769)])
def test_ppt_probability_matches_published_value(d, case, published):
    report = estimate_probability(PPTRegion(d), case, subsamples=4, n_raw_per=1_000_000, seed=13, workers=2)
    assert report.region == "ppt-oracle"
    assert [v.value for v in report.references] == [published]
    assert report.references[0].provenance is Provenance.PAPER
    assert abs(report.probability - published) <= 3 * report.bias_adjusted_stddev
