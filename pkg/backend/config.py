from pydantic import BaseModel, Field, ValidationError
from pydantic_settings import BaseSettings
from dotenv import dotenv_values
from pathlib import Path
from typing import List, Optional, Union

from models.errors import FormatError

VERSION = "1.0.0"


class Settings(BaseSettings):
    """Application settings - exact LHV side, double precision quantum side"""

    # Logging
    LOG_LEVEL: str = "INFO"

    # Reproducibility
    DEFAULT_SEED: int = 20070101

    # Optimizer defaults (multi-start Nelder-Mead)
    DEFAULT_RESTARTS: int = 32
    DEFAULT_MAX_ITERATIONS: int = 20000
    DEFAULT_TOLERANCE: float = 1e-12
    SWEEP_GRID_POINTS: int = 101
    CROSSING_TOLERANCE: float = 1e-6
    INCONCLUSIVE_MARGIN: float = 1e-7

    # Resource guards
    MAX_FACET_D: int = 5
    MAX_ENUMERATION_D: int = 8

    # Exact rank: Bareiss below this many matrix entries, modular above
    EXACT_RANK_MAX_ENTRIES: int = 200_000
    RANK_PRIME: int = 16_777_213  # 2**24 - 3

    # Concurrency
    THREADS: int = 1
    STRATEGY_CHUNK_SIZE: int = 4096

    # Result cache for bounds and certificates
    ENABLE_RESULT_CACHE: bool = True
    CACHE_TTL_SECONDS: int = 86400
    CACHE_MAX_SIZE: int = 256

    # CORS Settings
    ALLOWED_ORIGINS: List[str] = [
        "http://localhost:3000",
        "http://localhost:8000",
    ]

    class Config:
        env_file = ".env"
        extra = "allow"


settings = Settings()


class OptimizationConfig(BaseModel):
    """Multi-start simplex search parameters"""

    model_config = {"extra": "forbid"}

    restarts: int = Field(default=settings.DEFAULT_RESTARTS, ge=1)
    max_iterations: int = Field(default=settings.DEFAULT_MAX_ITERATIONS, ge=1)
    tolerance: float = Field(default=settings.DEFAULT_TOLERANCE, gt=0)
    symmetric_parties: bool = True
    seed: int = settings.DEFAULT_SEED
    threads: int = Field(default=settings.THREADS, ge=1)


def load_optimization_config(
    path: Optional[Union[str, Path]] = None,
    **overrides
) -> OptimizationConfig:
    """
    Build an OptimizationConfig from a KEY=value text file plus overrides

    Keys are the OptimizationConfig field names, case-insensitive.
    Overrides with value None are ignored.
    """
    values = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FormatError(f"Config file not found: {path}")
        for key, value in dotenv_values(path).items():
            values[key.strip().lower()] = value

    values.update({k: v for k, v in overrides.items() if v is not None})

    try:
        return OptimizationConfig(**values)
    except ValidationError as e:
        raise FormatError(f"Invalid optimizer config: {e}") from e
