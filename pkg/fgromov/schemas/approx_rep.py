"""Approximate-representation measurement schemas"""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field


class TranslationMatrix(BaseModel):
    """U_g: ρ(g)(λ_i e_i) ≈ Σ_j t[j][i] λ_j e_j + const over the window"""
    g: List[int]
    t: List[List[float]]
    residuals: List[float]
    window: int

    def as_array(self) -> np.ndarray:
        return np.array(self.t, dtype=float)


class CommutatorDefect(BaseModel):
    defect_in: float
    defect_out: float
    quadratic_ratio: Optional[float] = None


class BoxPrincipleResult(BaseModel):
    """S' = {g g_m^-1, g_m g^-1} from the mesh cells of {U_g}"""
    radius: int
    mesh: float
    index_bound: int
    cell_counts: List[int]
    generators: List[List[int]]
    residuals: List[float] = Field(default_factory=list)
    max_residual: float = 0.0


class RangeReport(BaseModel):
    radius: int
    sup_deviation: float
    ratio: float


class TranslationRow(BaseModel):
    """One CSV row of a translation report"""
    element: str
    norm: int
    deviation: float
    multiplicativity: float
    commutator_ratio: Optional[float] = None
