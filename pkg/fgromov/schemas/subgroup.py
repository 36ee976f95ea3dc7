"""Subgroup certificate schemas"""

from fractions import Fraction
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator


class KRSubgroupCert(BaseModel):
    """(K, R)-subgroup certificate.

    checked_inclusion=True means B_S(K+1) ⊆ B_S(K)·B_S'(K) was verified by
    exhaustive enumeration, and every generator has S-norm at most R.
    """
    K: int
    R: int
    generators: List[List[int]]
    checked_inclusion: bool
    generator_radius: int
    index: Optional[int] = None


class ReductionParams(BaseModel):
    """Growth-reduction parameters (kappa, d, R_0)"""
    kappa: float
    d: float
    R_0: float

    @field_validator("kappa")
    @classmethod
    def kappa_in_unit_interval(cls, v: float) -> float:
        if not 0 < v < 1:
            raise ValueError("kappa must lie strictly between 0 and 1")
        return v

    def exact_kappa(self) -> Fraction:
        return Fraction(str(self.kappa))


class GeneratorReductionResult(BaseModel):
    """Output of generator reduction"""
    radius: int
    ratio_profile: List[float]
    net_size: int
    covering_verified: bool
    scale_hypothesis_holds: bool
    transferred_R: float
    transferred_d: Optional[float] = None
    certificate: KRSubgroupCert


class CommutatorWitness(BaseModel):
    """g[e, e']g^-1 with its conjugator and generator indices"""
    element: List[int]
    conjugator: List[int]
    e: int
    e_prime: int


class CommutatorGeneratorsResult(BaseModel):
    radius: int
    product_set_sizes: List[int]
    inclusion_verified: bool
    witnesses: List[CommutatorWitness] = Field(default_factory=list)


class FiniteIndexResult(BaseModel):
    saturation_radius: int
    coset_counts: List[int]
    certificate: KRSubgroupCert


class NilpotencyResult(BaseModel):
    """Left-nested commutator check at a given step"""
    step: int
    nilpotent: bool
    witness: Optional[List[int]] = None
    distinct_commutators: int = 0
