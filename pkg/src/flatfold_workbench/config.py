"""Workbench configuration."""

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Workbench settings."""

    # Layer DP configuration
    MAX_PLY: int = Field(default=8, ge=1, description="Refuse arrangements whose ply exceeds this")
    THREADS: int = Field(default=1, ge=1, description="Worker threads for bag evaluation")

    # Brute-force budgets
    ORACLE_MAX_STATES: int = Field(
        default=1_000_000,
        gt=0,
        description="Largest global layering space the oracle will enumerate",
    )
    FLAP_MAX: int = Field(default=20, ge=1, description="Largest flap instance enumerated")
    FLAP_MAX_STATES: int = Field(
        default=200_000,
        gt=0,
        description="Largest flap state space enumerated or searched",
    )
    NCL_MAX_EDGES: int = Field(default=24, ge=1, description="Largest NCL edge count enumerated")

    # Gadget compilation
    GRID_UNIT: int = Field(
        default=40, ge=40, description="Flap coordinates between adjacent routing grid points"
    )

    # Tree decomposition configuration
    EXACT_TREEWIDTH_LIMIT: int = Field(
        default=12,
        ge=0,
        description="Graphs up to this many vertices get an exact-width decomposition",
    )

    # Bipyramid numerics
    BISECTION_MAX_ITER: int = Field(default=200, ge=1, description="Bisection iteration cap")
    BISECTION_TOL: float = Field(default=1e-12, gt=0, description="Default bisection tolerance")

    # Output
    SVG_SCALE: float = Field(default=40.0, gt=0, description="SVG pixels per unit length")
    LOG_LEVEL: str = Field(default="WARNING", description="Log level for the command line")
    LOG_JSON: bool = Field(default=True, description="Render logs as JSON lines")

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": True,
    }


@lru_cache
def get_settings() -> Settings:
    """Get cached workbench settings."""
    return Settings()
