"""Growth measurement schemas"""

from typing import List, Optional

from pydantic import BaseModel, Field


class GrowthSequence(BaseModel):
    """|B_S(r)| for r = 0..R_max"""
    fingerprint: str
    sizes: List[int]

    @property
    def radius(self) -> int:
        return len(self.sizes) - 1

    class Config:
        json_schema_extra = {
            "example": {"fingerprint": "3f1c...", "sizes": [1, 3, 5, 7, 7]}
        }


class DegreeEstimate(BaseModel):
    """Two-point log-log slope with the exponential flag"""
    r1: int
    r2: int
    slope: float
    exponential: bool
    delta: float


class GrowthRow(BaseModel):
    r: int
    size: int
    sphere: int
    stabilized: bool = False


class GrowthReport(BaseModel):
    """Output of the growth command"""
    group: str
    fingerprint: str
    rows: List[GrowthRow] = Field(default_factory=list)
    stabilization_radius: Optional[int] = None
    estimates: List[DegreeEstimate] = Field(default_factory=list)
    exponential: bool = False
    cached: bool = False
