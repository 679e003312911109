import json
from fractions import Fraction

import numpy as np
import pytest

from src.core.point import EWPoint
from src.core.spectrum import maximally_mixed
from src.geometry.metric import VolumeElementCase
from src.regions.predicates import (
    AllStates,
    Complement,
    Intersection,
    PolynomialRegion,
    PPTRegion,
    eval_region,
    ppt_oracle,
    resolve_region,
    triseparable_shipped,
)
from src.regions.raster import CellLabel, cross_section_raster
from src.regions.spec import load_region_spec, parse_rational, shipped_spec
from src.utils.exceptions import ConfigParse, InvalidParameters


def test_parse_rational():
    assert parse_rational("1/3") == Fraction(1, 3)
    assert parse_rational(" -0.5 ") == Fraction(-1, 2)
    assert parse_rational(2) == 2
    for bad in ("one third", "1/0", True, None):
        with pytest.raises(ValueError):
            parse_rational(bad)


def test_shipped_specs():
    trisep = shipped_spec("trisep_quoted")
    assert len(trisep.constraints) == 4
    assert trisep.necessary_only
    bisep = shipped_spec("bisep_necessary")
    assert len(bisep.constraints) == 1
    assert bisep.constraints[0].rhs == Fraction(1, 3)
    assert shipped_spec("trisep_quoted_qubit").case is VolumeElementCase.QUBIT


def test_unknown_shipped_spec():
    with pytest.raises(ConfigParse):
        shipped_spec("nope")


def test_spec_from_text_and_dict():
    document = {
        "name": "plus_heavy",
        "constraints": [{"terms": [[1, [0, 1, 0, 0, 0]]], "rel": ">=", "rhs": "1/2"}],
    }
    from_dict = load_region_spec(document)
    from_text = load_region_spec(json.dumps(document))
    assert from_dict == from_text
    assert from_dict.case is VolumeElementCase.GENERAL


def test_malformed_term_reports_field_and_line():
    text = """{
  "name": "broken",
  "constraints": [
    {"terms": [[1, [0, 1, 0, 0, 0]]], "rel": ">=", "rhs": 0},
    {"terms": [[1, [0, 1, 0]]], "rel": "<=", "rhs": 1}
  ]
}"""
    with pytest.raises(ConfigParse) as info:
        load_region_spec(text)
    assert info.value.field.startswith("constraints.1")
    assert info.value.line == 5


@pytest.mark.parametrize("text", ["{not json", '{"name": "x", "constraints": []}', "[1, 2]"])
def test_bad_spec_documents(text):
    with pytest.raises(ConfigParse):
        load_region_spec(text)


def test_bad_relation():
    with pytest.raises(ConfigParse):
        load_region_spec({"name": "x", "constraints": [{"terms": [[1, [1, 0, 0, 0, 0]]], "rel": "<"}]})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigParse):
        load_region_spec(tmp_path / "absent.json")


def test_bisep_necessary_predicate():
    spec = shipped_spec("bisep_necessary")
    assert not eval_region(spec, EWPoint(r_minus=0.34, r_plus=0.2))
    assert eval_region(spec, EWPoint(r_minus=0.2, r_plus=0.3, r1=0.1, r2=-0.2))
    assert eval_region(spec, EWPoint(r_minus=1 / 3, r_plus=0.2))
    assert not eval_region(spec, EWPoint(r_minus=0.2, r_plus=0.9))


def test_paradox_point_fails_bloch_constraint(paradox_point):
    assert not triseparable_shipped(paradox_point)
    slacks = shipped_spec("trisep_quoted").slacks(paradox_point.as_array())[0]
    assert np.all(slacks[:3] >= 0)
    assert slacks[3] == pytest.approx(4 * 0.17 ** 2 - paradox_point.R ** 2, abs=1e-12)


def test_triseparable_shipped():
    assert triseparable_shipped(maximally_mixed(3))
    assert not triseparable_shipped(EWPoint(r_minus=0.2, r_plus=0.5))
    assert not triseparable_shipped(EWPoint(r_minus=0.5, r_plus=0.6))


def test_triseparable_shipped_with_extra_constraints():
    extra = load_region_spec({
        "name": "tight",
        "constraints": [{"terms": [[1, [0, 1, 0, 0, 0]]], "rel": "<=", "rhs": "1/3"}],
    })
    p = maximally_mixed(3)
    assert not triseparable_shipped(p, extra)
    assert triseparable_shipped(EWPoint(r_minus=0.05, r_plus=0.3), extra)


def test_ppt_oracle():
    assert ppt_oracle(maximally_mixed(3), 3)
    # all weight in the Fermi sector: the antisymmetric projector is not PPT
    assert not ppt_oracle(EWPoint(r_minus=1.0, r_plus=0.0), 3)
    with pytest.raises(InvalidParameters):
        ppt_oracle(EWPoint(r_minus=0.5, r_plus=0.6), 3)


def test_containment_trisep_in_bisep(make_points):
    points = np.array([p.as_array() for p in make_points(200, margin=0.0)])
    trisep = PolynomialRegion(shipped_spec("trisep_quoted")).contains(points)
    bisep = PolynomialRegion(shipped_spec("bisep_necessary")).contains(points)
    assert not np.any(trisep & ~bisep)


def test_region_combinators(general_points):
    points = np.vstack([[p.as_array() for p in general_points], [[0.5, 0.6, 0.0, 0.0, 0.0]]])
    bisep = PolynomialRegion(shipped_spec("bisep_necessary"))
    everything = AllStates()
    outside = Complement(bisep)
    both = Intersection(bisep, everything)

    assert everything.contains(points).tolist() == [True] * len(general_points) + [False]
    np.testing.assert_array_equal(both.contains(points), bisep.contains(points))
    np.testing.assert_array_equal(outside.contains(points), everything.contains(points) & ~bisep.contains(points))
    assert both.name == "bisep_necessary&all"
    with pytest.raises(InvalidParameters):
        Intersection()


def test_ppt_region_matches_oracle(general_points):
    region = PPTRegion(3)
    points = np.array([p.as_array() for p in general_points])
    expected = [ppt_oracle(p, 3) for p in general_points]
    np.testing.assert_array_equal(region.contains(points), expected)


def test_resolve_region(tmp_path):
    assert isinstance(resolve_region("ppt-oracle", "qubit"), PPTRegion)
    assert resolve_region("ppt-oracle", "qubit").d == 2
    assert resolve_region("ppt-oracle", "general").d == 3
    assert isinstance(resolve_region("all", "general"), AllStates)
    assert resolve_region("bisep_necessary", "general").name == "bisep_necessary"
    path = tmp_path / "custom.json"
    path.write_text(json.dumps({"name": "custom", "case": "qubit",
                                "constraints": [{"terms": [[1, [0, 1, 0, 0, 0]]], "rel": ">=", "rhs": 0.5}]}))
    assert resolve_region(path, "qubit").name == "custom"
    with pytest.raises(InvalidParameters):
        resolve_region("trisep_quoted", "qubit")


def test_cross_section_structure():
    grid = cross_section_raster(0.1, 0.27, resolution=64)
    counts = grid.counts()
    assert counts["region-member"] > 0
    assert counts["excluded-by-bloch-constraint"] > 0
    assert counts["outside-EW"] > 0
    assert counts["EW-only"] == 0
    assert sum(counts.values()) == 64 * 64
    # central disk R <= 0.34 is in, the rest of the ball is excluded by the Bloch constraint
    centre = grid.labels[32, 32]
    assert centre == CellLabel.REGION_MEMBER
    assert grid.labels[32, 62] == CellLabel.EXCLUDED_BY_BLOCH
    assert grid.labels[0, 0] == CellLabel.OUTSIDE_EW


def test_raster_outside_marginal_bounds_is_ew_only():
    grid = cross_section_raster(0.2, 0.3, resolution=32)
    counts = grid.counts()
    assert counts["region-member"] == 0
    assert counts["EW-only"] > 0


def test_raster_pgm_and_legend():
    grid = cross_section_raster(0.1, 0.27, resolution=16, plane=("r1", "r3"))
    lines = grid.to_pgm().splitlines()
    assert lines[0] == "P2"
    assert lines[2] == "16 16"
    assert len(lines) == 4 + 16
    legend = grid.legend()
    assert legend["plane"] == ["r1", "r3"]
    assert legend["extent"] == [pytest.approx(-0.63), pytest.approx(0.63)]
    assert len(grid.to_frame()) == 256


@pytest.mark.parametrize("kwargs", [
    {"plane": ("r1", "r1")},
    {"plane": ("r1", "r4")},
    {"resolution": 4},
])
def test_raster_rejects_bad_arguments(kwargs):
    with pytest.raises(InvalidParameters):
        cross_section_raster(0.1, 0.27, **kwargs)


def test_raster_needs_a_ball():
    with pytest.raises(InvalidParameters):
        cross_section_raster(0.5, 0.5)
