import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.geometry.metric import VolumeElementCase
from src.utils.exceptions import ConfigParse

SPECS_DIR = Path(__file__).parent / "specs"
SHIPPED_SPECS = ("trisep_quoted", "trisep_quoted_qubit", "bisep_necessary")

Exponents = Tuple[int, int, int, int, int]


def parse_rational(value: Any) -> Fraction:
    """Exact coefficient from an int, a float or a string such as "1/3" or "-0.5" """
    if isinstance(value, bool):
        raise ValueError(f"not a number: {value!r}")
    if isinstance(value, (int, str)):
        try:
            return Fraction(value.strip() if isinstance(value, str) else value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational number: {value!r}") from exc
    if isinstance(value, float):
        return Fraction(value)
    raise ValueError(f"not a number: {value!r}")


class Term(BaseModel):
    """coefficient * r_minus^e0 * r_plus^e1 * r1^e2 * r2^e3 * r3^e4"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coefficient: Fraction
    exponents: Exponents

    @field_validator("coefficient", mode="before")
    @classmethod
    def _rational(cls, v):
        return parse_rational(v)

    @field_validator("exponents")
    @classmethod
    def _non_negative(cls, v):
        if any(e < 0 for e in v):
            raise ValueError("exponents must be non-negative")
        return v

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        monomial = np.ones(len(points))
        for column, power in enumerate(self.exponents):
            if power:
                monomial = monomial * points[:, column] ** power
        return float(self.coefficient) * monomial


class Constraint(BaseModel):
    """Polynomial inequality sum(terms) rel rhs; equality counts as membership"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    terms: Tuple[Term, ...] = Field(min_length=1)
    rel: str
    rhs: Fraction = Fraction(0)
    label: Optional[str] = None

    @field_validator("terms", mode="before")
    @classmethod
    def _pairs(cls, v):
        # JSON form [[coeff, [e_rm, e_rp, e1, e2, e3]], ...]
        if not isinstance(v, (list, tuple)):
            raise ValueError("terms must be a list")
        parsed = []
        for term in v:
            if isinstance(term, (list, tuple)):
                if len(term) != 2 or not isinstance(term[1], (list, tuple)) or len(term[1]) != 5:
                    raise ValueError(f"malformed term {term!r}; expected [coeff, [e_rm, e_rp, e1, e2, e3]]")
                parsed.append({"coefficient": term[0], "exponents": tuple(term[1])})
            else:
                parsed.append(term)
        return parsed

    @field_validator("rel")
    @classmethod
    def _relation(cls, v):
        if v not in ("<=", ">="):
            raise ValueError(f"rel must be '<=' or '>=', got {v!r}")
        return v

    @field_validator("rhs", mode="before")
    @classmethod
    def _rational(cls, v):
        return parse_rational(v)

    def polynomial(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return sum(term.evaluate(points) for term in self.terms)

    def slack(self, points: np.ndarray) -> np.ndarray:
        """Non-negative exactly where the constraint holds"""
        value = self.polynomial(points) - float(self.rhs)
        return -value if self.rel == "<=" else value

    def degree_in(self, column: int) -> int:
        return max(term.exponents[column] for term in self.terms)

    def univariate_coefficients(self, points: np.ndarray, column: int) -> np.ndarray:
        """
        Coefficients of slack as a polynomial in one coordinate, other coordinates
        taken from points

        Returns:
            (N, degree + 1) array, column k multiplying x^k
        """
        points = np.atleast_2d(points)
        sign = -1.0 if self.rel == "<=" else 1.0
        coefficients = np.zeros((len(points), self.degree_in(column) + 1))
        coefficients[:, 0] -= sign * float(self.rhs)
        for term in self.terms:
            power = term.exponents[column]
            reduced = term.model_copy(update={"exponents": tuple(0 if i == column else e for i, e in enumerate(term.exponents))})
            coefficients[:, power] += sign * reduced.evaluate(points)
        return coefficients

    def describe(self) -> str:
        names = ("r_minus", "r_plus", "r1", "r2", "r3")
        parts = []
        for term in self.terms:
            factors = [name if e == 1 else f"{name}^{e}" for name, e in zip(names, term.exponents) if e]
            parts.append(" ".join([str(term.coefficient)] + factors) if factors else str(term.coefficient))
        return f"{' + '.join(parts)} {self.rel} {self.rhs}"


class RegionSpec(BaseModel):
    """Named conjunction of polynomial constraints on EW points"""

    model_config = ConfigDict(frozen=True)

    name: str
    case: VolumeElementCase = VolumeElementCase.GENERAL
    constraints: Tuple[Constraint, ...] = Field(min_length=1)
    necessary_only: bool = False
    description: Optional[str] = None

    def slacks(self, points: np.ndarray) -> np.ndarray:
        """(N, m) slack matrix, one column per constraint"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.column_stack([c.slack(points) for c in self.constraints])

    def extended(self, other: "RegionSpec") -> "RegionSpec":
        """Conjunction with another spec's constraints"""
        return RegionSpec(
            name=f"{self.name}+{other.name}",
            case=self.case,
            constraints=self.constraints + other.constraints,
            necessary_only=self.necessary_only and other.necessary_only,
            description=self.description,
        )

    def with_constraint(self, constraint: Constraint, name: Optional[str] = None) -> "RegionSpec":
        return self.model_copy(update={"name": name or self.name, "constraints": self.constraints + (constraint,)})


def _line_of(text: str, needle: str, occurrence: int) -> Optional[int]:
    matches = list(re.finditer(re.escape(needle), text))
    if occurrence < len(matches):
        return text.count("\n", 0, matches[occurrence].start()) + 1
    return None


def _diagnose(exc: ValidationError, text: Optional[str]) -> ConfigParse:
    error = exc.errors()[0]
    location = [str(part) for part in error["loc"]]
    field = ".".join(location)
    line = None
    if text is not None:
        if len(location) >= 2 and location[0] == "constraints" and location[1].isdigit():
            line = _line_of(text, '"terms"', int(location[1]))
        elif location:
            line = _line_of(text, f'"{location[0]}"', 0)
    return ConfigParse(f"invalid region spec: {error['msg']}", line=line, field=field or None)


def load_region_spec(document: Union[str, Path, Dict[str, Any]]) -> RegionSpec:
    """
    Parse a region spec from a dict, JSON text, a file path or a shipped spec name

    Raises:
        ConfigParse: malformed JSON or schema violation, with line/field where known
    """
    text = None
    if isinstance(document, Path) or (isinstance(document, str) and not document.lstrip().startswith("{")):
        path = Path(document)
        if not path.exists() and str(document) in SHIPPED_SPECS:
            path = SPECS_DIR / f"{document}.json"
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigParse(f"cannot read region spec {str(document)!r}: {exc}") from exc
    elif isinstance(document, str):
        text = document

    if text is not None:
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParse(f"region spec is not valid JSON: {exc.msg}", line=exc.lineno) from exc

    if not isinstance(document, dict):
        raise ConfigParse("region spec must be a JSON object")
    try:
        spec = RegionSpec.model_validate(document)
    except ValidationError as exc:
        raise _diagnose(exc, text) from exc
    logger.debug(f"loaded region spec '{spec.name}' ({spec.case.value}, {len(spec.constraints)} constraints)")
    return spec


def shipped_spec(name: str) -> RegionSpec:
    if name not in SHIPPED_SPECS:
        raise ConfigParse(f"unknown shipped region spec {name!r}; available: {', '.join(SHIPPED_SPECS)}")
    return load_region_spec(SPECS_DIR / f"{name}.json")

