"""Application configuration using pydantic-settings."""

from typing import List

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="STATMAN_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Execution
    threads: int = Field(
        default=1, ge=1, le=64, description="Worker threads for point sweeps"
    )
    log_level: str = Field(default="WARNING", description="Logging level")

    # Sampling
    points: int = Field(default=20, ge=1, description="Sample points per chart")
    seed: int = Field(default=0, ge=0, description="Seed for the quasi-random sampler")

    # Tolerances
    tol: float = Field(
        default=1e-8, gt=0.0, description="Tolerance for analytic-jet identity checks"
    )
    fd_tol: float = Field(
        default=1e-4, gt=0.0, description="Tolerance for finite-difference-backed checks"
    )
    quad_tol: float = Field(
        default=1e-6, gt=0.0, description="Convergence tolerance for quadrature"
    )
    hysteresis: float = Field(
        default=10.0,
        gt=1.0,
        description="A defect at or above hysteresis * tol is a definite failure",
    )
    singular_rtol: float = Field(
        default=1e-12,
        gt=0.0,
        description="Relative determinant threshold below which a metric is singular",
    )

    # Finite differences
    fd_step: float = Field(
        default=1e-3, gt=0.0, description="Base step for nested central differences"
    )

    # Quadrature
    quad_nodes: int = Field(
        default=64, ge=4, description="Initial node count for adaptive quadrature"
    )
    quad_max_nodes: int = Field(
        default=2048, ge=8, description="Node count at which doubling gives up"
    )
    field_quad_nodes: int = Field(
        default=256,
        ge=8,
        description="Fixed node count for quadrature-backed chart fields",
    )

    # alpha-connections
    alphas: List[float] = Field(
        default=[-1.0, -0.5, 0.0, 0.5, 1.0],
        description="Default alpha grid for scans and alpha-family identities",
    )


# Global settings instance
settings = Settings()
