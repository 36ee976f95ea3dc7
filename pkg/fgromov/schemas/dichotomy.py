"""Lattice dichotomy and Milnor-Wolf certificate schemas"""

from typing import List, Optional

from pydantic import BaseModel, Field

from fgromov.models.enums import DichotomyBranch


class DichotomyResult(BaseModel):
    """Periodic carries (period, w) with T^period w = w; Growth carries (lambda_max, mahler, v, measured_rate)"""
    branch: DichotomyBranch
    char_poly: List[int]
    period: Optional[int] = None
    w: Optional[List[int]] = None
    lambda_max: Optional[float] = None
    mahler: Optional[float] = None
    v: Optional[List[int]] = None
    measured_rate: Optional[float] = None
    steps: Optional[int] = None
    dobrowolski_reference: Optional[float] = None

    class Config:
        use_enum_values = True


class UnipotentTower(BaseModel):
    """Chain Z^D = L_0 > L_1 > ... > L_m = 0 with L_(i+1) = (T^(p_i) - I) L_i"""
    periods: List[int]
    P: int
    ranks: List[int]
    bases: List[List[List[int]]] = Field(default_factory=list)
    polynomial: bool = True
    unipotent_verified: bool = False
    growth: Optional[DichotomyResult] = None


class SlowGrowthCert(BaseModel):
    """T^n S~ ⊆ B_S~(3) for |n| <= range, checked exhaustively"""
    R: int
    N: int
    range: int
    spread: int
    ratio_profile: List[float]
    increments: List[int]
    strict_pigeonhole: bool
    generators: List[List[int]]
    verified: bool


class SpotCheckRow(BaseModel):
    h: List[int]
    n: int
    norm_h: int
    norm_image: Optional[int] = None
    bound: int
    holds: bool


class TorsionRelation(BaseModel):
    coefficients: List[int]
    dropped_index: int
    dropped_generator: List[int]
    M_after: int


class TorsionFreeCert(BaseModel):
    """All Σ n_i f_i with Σ|n_i| <= F(M) are pairwise distinct"""
    generators: List[List[int]]
    M: int
    F_of_M: int
    lineage: List[TorsionRelation] = Field(default_factory=list)
    iterations: int
    verified: bool


class NormComparabilityReport(BaseModel):
    """upper = max ||h||_S~ / ||h||_S''', lower = max ||h||_S''' / ||h||_S~ over the S'''-ball"""
    radius: int
    upper: float
    lower: float
    M_est: float


class VirtuallyNilpotentCert(BaseModel):
    P: int
    generators: List[List[int]]
    step: int
    nilpotent: bool
    witness: Optional[List[int]] = None
