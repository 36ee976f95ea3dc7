"""Harmonic-analysis measurement schemas"""

from typing import Optional

from pydantic import BaseModel

from fgromov.models.enums import HarmonicCase


class HarmonicCheck(BaseModel):
    """Measured Lipschitz seminorm and ||Δu||_∞ against an eps target"""
    lip: float
    eps: float
    target: float
    holds: bool


class CesaroReport(BaseModel):
    radius: int
    l1_norm: float
    laplacian_l1: float
    laplacian_bound: float


class AlmostHarmonicResult(BaseModel):
    """Outcome of the almost-harmonic construction.

    For the finite-group branch the function is identically zero and the
    measured fields are zero.
    """
    case: HarmonicCase
    radius: int
    working_radius: int
    lip: float
    eps: float
    eps_bound: float
    grad_at_id: float
    gradient_l1: Optional[float] = None
    generator_index: Optional[int] = None
    laplacian_l1: Optional[float] = None
    projection_rank: Optional[int] = None
    eps_exponent: Optional[float] = None

    class Config:
        use_enum_values = True


class PoincareCheck(BaseModel):
    lhs: float
    rhs: float
    holds: bool


class ReversePoincareCheck(BaseModel):
    """lhs against C_probe * |S| * ((1/r)||f|| + eps r |B(2r)|^(1/2))"""
    lhs: float
    rhs: float
    holds: bool
    c_probe: float
    c_min: float
    eps: float
