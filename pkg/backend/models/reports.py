"""
Result records returned by the services and serialized by the CLI and HTTP layer
"""

from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator


class TightnessReport(BaseModel):
    """Facet certificate of a probability-form inequality"""

    label: str
    classical_max: str  # exact rational
    bound: str
    is_valid: bool
    is_attained: bool
    saturating_count: int
    affine_rank: int
    polytope_dim: int
    is_facet: bool
    rank_method: Literal["bareiss", "modular"]

    @model_validator(mode="after")
    def _check_consistency(self):
        if not 0 <= self.affine_rank <= self.polytope_dim:
            raise ValueError("affine_rank must lie in [0, polytope_dim]")
        if self.is_facet and not (self.is_valid and self.is_attained):
            raise ValueError("a facet must be valid and attained")
        return self


class ThresholdReport(BaseModel):
    """Noise robustness of a violation, F = 1 - B/Q or V = B/Q"""

    label: str = ""
    quantum_value: float
    classical_bound: float
    kind: Literal["fidelity", "visibility"]
    threshold: Optional[float]
    violated: bool


class MaximizationResult(BaseModel):
    """Best point found by the multi-start simplex search"""

    value: float
    parameters: List[float]
    converged: bool
    evaluations: int
    best_restart: int
    seed: int
    stationary: bool = True


class SweepRow(BaseModel):
    index: int
    inequality: str = ""
    xi: Optional[float] = None
    beta: Optional[float] = None
    value: float
    bound: float
    ratio: float
    converged: bool
    parameters: List[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_ratio(self):
        if self.bound != 0 and abs(self.ratio - self.value / self.bound) > 1e-12:
            raise ValueError("ratio must equal value / bound")
        return self


class SweepSeries(BaseModel):
    """One curve of a sweep: an inequality along a family, at one W parameter"""

    label: str
    name: str
    family: str
    beta: Optional[float] = None
    rows: List[SweepRow]


class EntanglementReport(BaseModel):
    """Single-party reduced-state purities of a three-qubit pure state"""

    is_product: bool
    separable_cuts: List[str]
    reduced_second_eigenvalues: Dict[str, float]


class ProbeSample(BaseModel):
    index: int
    source: Literal["canonical", "haar", "fixed"]
    is_entangled: bool
    value: Optional[float] = None
    margin: Optional[float] = None
    status: Literal["violated", "inconclusive", "counterexample", "excluded"]


class ProbeReport(BaseModel):
    sample_count: int
    seed: int
    entangled_count: int
    excluded_count: int
    inconclusive_count: int
    counterexamples: List[int]
    min_margin: Optional[float]
    samples: List[ProbeSample]


class EquivalenceResult(BaseModel):
    """Affine relation LHS_prob = scale * LHS_corr + offset, if one exists"""

    equivalent: bool
    scale: float
    offset: float
    max_discrepancy: float
    checked_behaviours: int
    witness: Optional[List[float]] = None
    witness_description: Optional[str] = None


class RunManifest(BaseModel):
    command: str
    argv: List[str]
    seed: int
    version: str
    duration_seconds: float = 0.0
    artifacts: List[str] = Field(default_factory=list)


class CatalogEntry(BaseModel):
    name: str
    form: Literal["probability", "correlation"]
    d: Optional[int] = None
    outcomes: Optional[int] = None
    bound: str
    label: str


class ViolationReport(BaseModel):
    name: str
    state: str
    settings_mode: Literal["reference", "optimize"]
    value: float
    bound: float
    ratio: float
    noise: float = 0.0
    noisy_value: Optional[float] = None
    threshold: Optional[float] = None
    threshold_kind: Literal["fidelity", "visibility"] = "fidelity"
    converged: bool = True
    settings: Dict[str, List[float]] = Field(default_factory=dict)


class TableComparisonRow(BaseModel):
    triple: Tuple[int, int, int]
    r: int
    computed: float
    reference: str
    delta: float


class Ghz4TableReport(BaseModel):
    rows: List[TableComparisonRow]
    lhs: float
    max_delta: float
    matches: bool


class BoundReport(BaseModel):
    name: str
    form: Literal["probability", "correlation"]
    classical_max: str
    bound: str
    is_valid: bool
    maximizer_count: Optional[int] = None
    witness: List[int] = Field(default_factory=list)


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str
    witness: Optional[str] = None
