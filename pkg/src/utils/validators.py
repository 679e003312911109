import math
from typing import TYPE_CHECKING, List, Optional

import numpy as np
from pydantic import BaseModel

from src.config.settings import settings

if TYPE_CHECKING:
    from src.core.point import EWPoint


class ValidationResult(BaseModel):
    valid: bool
    violations: List[str] = []


class PointValidator:
    """
    Validation of Eggeling-Werner parameter points

    Checks the defining relations one by one and reports each violation:
    - r_minus >= 0 and r_plus >= 0
    - r0 = 1 - r_minus - r_plus >= 0
    - R = |(r1, r2, r3)| <= r0 (ball constraint)
    - qubit-case points have r_minus == 0
    """

    def __init__(self, slack: float = 0.0):
        if slack < 0:
            raise ValueError("slack must be non-negative")
        self.slack = slack

    def validate_finite(self, p: "EWPoint") -> List[str]:
        return [f"{name} is not finite" for name, value in
                (("r_minus", p.r_minus), ("r_plus", p.r_plus), ("r1", p.r1), ("r2", p.r2), ("r3", p.r3))
                if not math.isfinite(value)]

    def validate_simplex(self, p: "EWPoint") -> List[str]:
        violations = []
        if p.r_minus < -self.slack:
            violations.append(f"r_minus >= 0 violated (r_minus = {p.r_minus!r})")
        if p.r_plus < -self.slack:
            violations.append(f"r_plus >= 0 violated (r_plus = {p.r_plus!r})")
        if p.r0 < -self.slack:
            violations.append(f"r0 = 1 - r_minus - r_plus >= 0 violated (r0 = {p.r0!r})")
        return violations

    def validate_ball(self, p: "EWPoint") -> List[str]:
        if p.R > p.r0 + self.slack:
            return [f"r1^2 + r2^2 + r3^2 <= r0^2 violated (R = {p.R!r}, r0 = {p.r0!r})"]
        return []

    def validate(self, p: "EWPoint", qubit: bool = False) -> ValidationResult:
        violations = self.validate_finite(p)
        if not violations:
            violations += self.validate_simplex(p)
            violations += self.validate_ball(p)
        if qubit and p.r_minus != 0.0:
            violations.append(f"qubit case requires r_minus == 0 (r_minus = {p.r_minus!r})")
        return ValidationResult(valid=not violations, violations=violations)


# Utility functions
def validate(p: "EWPoint", qubit: bool = False) -> ValidationResult:
    """Exact validation: constraints compared on the inputs without tolerance"""
    return PointValidator().validate(p, qubit=qubit)


def validate_with_slack(p: "EWPoint", eps: Optional[float] = None, qubit: bool = False) -> ValidationResult:
    """Validation for points produced by floating arithmetic; every inequality relaxed by eps"""
    return PointValidator(settings.validation_slack if eps is None else eps).validate(p, qubit=qubit)


def valid_mask(points: np.ndarray, slack: float = 0.0) -> np.ndarray:
    """
    Vectorized validity test on an (N, 5) array of (r_minus, r_plus, r1, r2, r3)

    Returns:
        Boolean mask, True where the row is a valid EW point
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    r_minus, r_plus = points[:, 0], points[:, 1]
    r0 = 1.0 - r_minus - r_plus
    radius = np.sqrt(np.einsum("ij,ij->i", points[:, 2:5], points[:, 2:5]))
    return (
        np.isfinite(points).all(axis=1)
        & (r_minus >= -slack)
        & (r_plus >= -slack)
        & (r0 >= -slack)
        & (radius <= r0 + slack)
    )
