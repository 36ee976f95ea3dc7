"""Gram-volume and dimension measurement schemas"""

from typing import List, Optional

from pydantic import BaseModel, Field


class VolumeDecreaseReport(BaseModel):
    """Vol_R / Vol_4R next to the reference factor δ^(k/2) (|B(7δR)|/|B(δR)|)^(k/2).

    ratio is None when Vol_4R vanishes (0/0).
    """
    k: int
    radius: int
    delta: float
    volume_inner: float
    volume_outer: float
    ratio: Optional[float] = None
    degenerate: bool = False
    reference_factor: float
    required_k: float
    hypothesis_holds: bool


class GreedyStep(BaseModel):
    k: int
    candidate: int
    volume: float
    drop_ratio: float


class GreedyDimensionResult(BaseModel):
    dim: int
    radius: int
    drop_factor: float
    chosen: List[int]
    steps: List[GreedyStep] = Field(default_factory=list)


class ScaleProfileEntry(BaseModel):
    """det Q_R against det Q_(R-step)"""
    radius: int
    det_inner: float
    det_outer: float
    ratio: Optional[float] = None


class GoodScaleResult(BaseModel):
    radius: int
    target: float
    profile: List[ScaleProfileEntry]
