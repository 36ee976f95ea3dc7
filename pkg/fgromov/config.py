"""Application configuration"""

from pydantic_settings import BaseSettings
from typing import List


class Settings(BaseSettings):
    """Application settings"""

    # Application
    APP_NAME: str = "fgromov"
    APP_VERSION: str = "0.1.0"
    LOG_LEVEL: str = "INFO"

    # Ball enumeration and caching
    FGROMOV_CACHE: str | None = None  # defaults to ~/.cache/fgromov
    BALL_ELEMENT_CAP: int = 5_000_000
    EXPONENTIAL_DELTA: float = 0.05

    # Combinatorial caps
    NILPOTENCY_TUPLE_CAP: int = 1_000_000
    PRODUCT_SET_CAP: int = 2_000_000
    TORSION_SEARCH_CAP: int = 2_000_000

    # Numerical tolerances
    IDENTITY_TOL: float = 1e-9
    VOLUME_CLAMP_TOL: float = 1e-9
    DENSE_SOLVE_LIMIT: int = 4000
    CG_RTOL: float = 1e-12
    DIRICHLET_RESIDUAL_TOL: float = 1e-9
    PROJECTION_NORM_FLOOR: float = 1e-12
    SPAN_SINGULAR_FLOOR: float = 1e-8

    # Kleiner / approximate representations
    DROP_FACTOR: float = 1e-3
    MVEE_TOL: float = 1e-3
    OMEGA_SAMPLE_FACTOR: int = 20
    TRIVIAL_DIRECTION_TOL: float = 0.05
    MULTIPLICATIVITY_TOL: float = 0.1
    BOX_MESH_FACTOR: float = 10.0

    # Lattice dichotomy
    MAHLER_GUARD: float = 1e-9
    GROWTH_RATE_FLOOR: float = 1e-6
    RATIONAL_DENOMINATORS: List[int] = [10**3, 10**6, 10**9]

    # Milnor-Wolf
    TORSION_F_SLOPE: int = 8
    TORSION_F_OFFSET: int = 8
    SLOWG_SPREAD: int = 10
    SLOWG_MIN_RANGE: int = 2
    SLOWG_RANGE_DIVISOR: int = 4

    # Reduction loop
    DESCENT_THRESHOLD: float = 0.5
    REDUCE_MAX_STEPS: int = 10
    WALL_CLOCK_SECONDS: int = 600
    DEFAULT_SEED: int = 0

    class Config:
        env_file = ".env"
        case_sensitive = True


settings = Settings()
