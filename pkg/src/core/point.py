import math
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

# Column order used everywhere points travel as arrays or CSV rows
PARAMETER_NAMES: Tuple[str, ...] = ("r_minus", "r_plus", "r1", "r2", "r3")


class EWPoint(BaseModel):
    """
    Eggeling-Werner parameter point (r_minus, r_plus, r1, r2, r3)

    r0 = 1 - r_minus - r_plus is derived and never stored, so the simplex
    identity r_plus + r_minus + r0 = 1 holds by construction. Any real
    5-tuple is representable; use validate() to decide whether it is a state.
    Qubit-case points carry r_minus = 0 exactly.
    """

    model_config = ConfigDict(frozen=True)

    r_minus: float = 0.0
    r_plus: float
    r1: float = 0.0
    r2: float = 0.0
    r3: float = 0.0

    @property
    def r0(self) -> float:
        return 1.0 - self.r_minus - self.r_plus

    @property
    def r(self) -> Tuple[float, float, float]:
        return (self.r1, self.r2, self.r3)

    @property
    def R(self) -> float:
        return math.hypot(self.r1, self.r2, self.r3)

    def as_array(self) -> np.ndarray:
        return np.array([self.r_minus, self.r_plus, self.r1, self.r2, self.r3], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "EWPoint":
        r_minus, r_plus, r1, r2, r3 = (float(v) for v in values)
        return cls(r_minus=r_minus, r_plus=r_plus, r1=r1, r2=r2, r3=r3)

    def to_document(self) -> Dict[str, Any]:
        """JSON form {"r_minus": ..., "r_plus": ..., "r": [r1, r2, r3]}"""
        return {"r_minus": self.r_minus, "r_plus": self.r_plus, "r": [self.r1, self.r2, self.r3]}

    @classmethod
    def from_document(cls, document: Dict[str, Any]) -> "EWPoint":
        r = document.get("r", [0.0, 0.0, 0.0])
        if len(r) != 3:
            raise ValueError("'r' must hold exactly three components")
        return cls(
            r_minus=float(document.get("r_minus", 0.0)),
            r_plus=float(document["r_plus"]),
            r1=float(r[0]),
            r2=float(r[1]),
            r3=float(r[2]),
        )

    def to_spherical(self) -> "SphericalPoint":
        return to_spherical(self)

    @classmethod
    def from_spherical(cls, s: "SphericalPoint") -> "EWPoint":
        return to_cartesian(s)


class SphericalPoint(BaseModel):
    """
    EW point with the Bloch part in spherical coordinates.

    NOTE: r1 is the polar axis here, not r3:
        r1 = R cos(theta), r2 = R sin(theta) cos(phi), r3 = R sin(theta) sin(phi)
    """

    model_config = ConfigDict(frozen=True)

    r_minus: float = 0.0
    r_plus: float
    R: float = Field(ge=0.0)
    theta: float = Field(default=0.0, ge=0.0, le=math.pi)
    phi: float = Field(default=0.0, ge=0.0, lt=2.0 * math.pi)

    @property
    def r0(self) -> float:
        return 1.0 - self.r_minus - self.r_plus

    def as_array(self) -> np.ndarray:
        return np.array([self.r_minus, self.r_plus, self.R, self.theta, self.phi], dtype=float)


def to_spherical(p: EWPoint) -> SphericalPoint:
    """Cartesian -> spherical; theta = phi = 0 at R = 0 by convention"""
    R = p.R
    if R == 0.0:
        return SphericalPoint(r_minus=p.r_minus, r_plus=p.r_plus, R=0.0, theta=0.0, phi=0.0)

    theta = math.atan2(math.hypot(p.r2, p.r3), p.r1)
    phi = math.atan2(p.r3, p.r2)
    if phi < 0.0:
        phi += 2.0 * math.pi
        if phi >= 2.0 * math.pi:
            phi = 0.0
    return SphericalPoint(r_minus=p.r_minus, r_plus=p.r_plus, R=R, theta=theta, phi=phi)


def to_cartesian(s: SphericalPoint) -> EWPoint:
    sin_theta = math.sin(s.theta)
    return EWPoint(
        r_minus=s.r_minus,
        r_plus=s.r_plus,
        r1=s.R * math.cos(s.theta),
        r2=s.R * sin_theta * math.cos(s.phi),
        r3=s.R * sin_theta * math.sin(s.phi),
    )
