"""Reduction traces, certificates and report schemas for the command pipeline"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from fgromov.models.enums import StepKind, TerminalState
from fgromov.schemas.dichotomy import (
    DichotomyResult,
    SlowGrowthCert,
    UnipotentTower,
    VirtuallyNilpotentCert,
)
from fgromov.schemas.harmonic import AlmostHarmonicResult
from fgromov.schemas.subgroup import (
    CommutatorGeneratorsResult,
    FiniteIndexResult,
    GeneratorReductionResult,
    KRSubgroupCert,
    NilpotencyResult,
)


class ReductionStep(BaseModel):
    """One subgroup passage.

    Step1 carries a verified (K, R)-subgroup certificate and its index bound;
    Step2 names the cyclic target and the kernel it passes to.
    """
    index: int
    kind: StepKind
    group: Dict[str, Any]
    sizes_before: List[int]
    sizes_after: List[int] = Field(default_factory=list)
    d_before: Optional[float] = None
    d_after: Optional[float] = None
    index_bound: Optional[int] = None
    certificate: Optional[KRSubgroupCert] = None
    generator_reduction: Optional[GeneratorReductionResult] = None
    cyclic_target: Optional[str] = None
    kernel_oracle: Optional[str] = None
    commutators: Optional[CommutatorGeneratorsResult] = None
    harmonic: Optional[AlmostHarmonicResult] = None
    trivial_direction_deviation: Optional[float] = None
    subgroup_generators: List[List[int]] = Field(default_factory=list)

    class Config:
        use_enum_values = True


class ReductionTrace(BaseModel):
    """Ordered passages and the state the loop stopped in.

    Every Step1 in `steps` carries a verified certificate. A generator
    reduction whose certificate fails ends the trace as `uncertified`, with
    the failed certificate kept in `rejected_certificate` and not as a step.
    """
    group: str
    fingerprint: str
    radius: int
    steps: List[ReductionStep] = Field(default_factory=list)
    step_count: int = 0
    terminal: TerminalState
    terminal_size: Optional[int] = None
    total_index_bound: int = 1
    rejected_certificate: Optional[KRSubgroupCert] = None

    class Config:
        use_enum_values = True


class NilpotentCertificate(BaseModel):
    """(K, R, s)-virtual nilpotency: a verified (K, R)-subgroup that is s-step nilpotent"""
    group: str
    s: int
    K: int
    R: int
    subgroup: KRSubgroupCert
    nilpotency: NilpotencyResult
    finite_index: Optional[FiniteIndexResult] = None
    kernel_oracle: Optional[str] = None
    certified: bool


class DichotomyReport(BaseModel):
    matrix: List[List[int]]
    result: DichotomyResult
    tower: Optional[UnipotentTower] = None


class SlowGrowthReport(BaseModel):
    group: str
    certificate: SlowGrowthCert
    tower: Optional[UnipotentTower] = None
    assembly: Optional[VirtuallyNilpotentCert] = None


class HarmonicReport(BaseModel):
    group: str
    result: AlmostHarmonicResult
    sup_norm: float


class MilnorCheck(BaseModel):
    """4(Δ/δ) exp(2πΔ√K R) < R and the ball bound 4^n (Δ/δ)^n R^n exp(2πΔ√K R)"""
    n: int
    K: float
    Delta: float
    delta: float
    R: float
    log_lhs: float
    lhs: float
    rhs: float
    holds: bool
    log_ball_bound: float
    ball_bound: float
    C: Optional[float] = None
    hypothesis_holds: Optional[bool] = None


class VerificationResult(BaseModel):
    kind: str
    checked: int
    failures: List[str] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures
