from pydantic import BaseModel, Field, field_validator
from typing import Optional, Dict, Any, List
from enum import Enum


class Provenance(str, Enum):
    PAPER = "paper"
    DERIVED = "derived-oracle"
    ESTIMATE = "estimate"


class CaseName(str, Enum):
    QUBIT = "qubit"
    GENERAL = "general"


class QuadratureTarget(str, Enum):
    NORMALIZATION = "normalization"
    TRISEP_BOUND = "trisep-bound"
    TRISEP_SHIPPED_BOUND = "trisep-shipped-bound"
    BISEP_BOUND = "bisep-bound"
    QUBIT_BOUND = "qubit-bound"
    SIMPLEX = "simplex"


class LabeledValue(BaseModel):
    """A number together with where it comes from"""

    name: str
    value: float
    provenance: Provenance
    note: Optional[str] = None


# Monte Carlo Schemas
class SubsampleRecord(BaseModel):
    index: int
    n_raw: int
    accepted: int
    discarded_singular: int
    weight_sum: float
    region_weight_sum: float
    probability: float


class ChunkingDescriptor(BaseModel):
    chunk_size: int
    chunks_per_subsample: int
    generator: str = "Philox(SeedSequence([seed, subsample, chunk]))"


class EstimateReport(BaseModel):
    case: CaseName
    region: str
    given: Optional[str] = None
    necessary_only: bool = False
    subsamples: List[SubsampleRecord]
    pooled_probability: LabeledValue
    bias_adjusted_stddev: Optional[float] = None
    acceptance_rate: float
    acceptance_reference: LabeledValue
    seed: int
    chunking: ChunkingDescriptor
    references: List[LabeledValue] = []

    @field_validator("acceptance_rate")
    @classmethod
    def validate_unit_interval(cls, v):
        if not 0.0 <= v <= 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
        return v

    @field_validator("pooled_probability")
    @classmethod
    def validate_pooled(cls, v):
        if not 0.0 <= v.value <= 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
        return v

    @property
    def probability(self) -> float:
        return self.pooled_probability.value

    @property
    def total_weight(self) -> float:
        return sum(s.weight_sum for s in self.subsamples)


class BoundaryRegionTally(BaseModel):
    region: str
    h_sum: float = Field(ge=0.0)
    saturation_points: int
    discarded_singular: int = 0


class BoundaryAreaReport(BaseModel):
    case: CaseName
    saturation_variable: str
    sampling: str
    n_draws: int
    seed: int
    numerator: BoundaryRegionTally
    denominator: BoundaryRegionTally
    ratio: Optional[float] = None
    references: List[LabeledValue] = []
    caveat: str = "boundary areas use h = sqrt(det) of the sub-tensor without a surface-Jacobian correction"


# Quadrature Schemas
class QuadratureResult(BaseModel):
    value: float
    error: float = Field(ge=0.0)
    evaluations: int
    method: str

    @field_validator("value")
    @classmethod
    def validate_finite(cls, v):
        if v != v or v in (float("inf"), float("-inf")):
            raise ValueError("quadrature value must be finite")
        return v


class QuadratureReport(BaseModel):
    target: QuadratureTarget
    case: Optional[CaseName] = None
    region: Optional[str] = None
    tolerance: float
    result: QuadratureResult
    probability: Optional[float] = None
    values: List[LabeledValue] = []
    upper_bound: Optional[LabeledValue] = None
    # normalization only: which stated total the computation matched, and computed / printed
    reproduced: Optional[LabeledValue] = None
    total_ratio: Optional[LabeledValue] = None


# Run configuration and envelope
class RunConfig(BaseModel):
    """
    Everything a run was asked to do

    arguments shape the result and enter the digest; execution (workers, output
    format and path, log level) does not.
    """

    command: str
    arguments: Dict[str, Any]
    execution: Dict[str, Any] = {}


class ReportEnvelope(BaseModel):
    schema_version: str = Field(serialization_alias="schema")
    command: str
    config: RunConfig
    digest: str
    result: Any
