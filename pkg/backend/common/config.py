"""
Configuration management for the PMI inner-approximation toolkit
"""

from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="PMI_",
        env_file=[".env", "../.env"],  # Look for .env in current dir and parent dir
        case_sensitive=False,
        extra="ignore",
    )

    # Environment
    environment: str = Field(default="development")
    debug: bool = Field(default=False)

    # Logging
    log_level: str = Field(default="INFO")
    log_format: str = Field(default="%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    # Interior-point solver
    solver_tol: float = Field(default=1e-8, gt=0)
    solver_max_iter: int = Field(default=200, ge=1)
    step_fraction: float = Field(default=0.98, gt=0, lt=1)
    free_regularization: float = Field(default=1e-9, ge=0)
    infeasibility_ratio: float = Field(default=1e8, gt=1)
    factor_retries: int = Field(default=3, ge=0)
    step_backtracks: int = Field(default=8, ge=0)

    # Polynomial I/O
    drop_tolerance: float = Field(default=1e-12, ge=0)

    # SOS assembly
    archimedean_guard: bool = Field(default=True)
    guard_margin: float = Field(default=1.05, gt=1)
    row_scaling: bool = Field(default=True)
    nested_slack: float = Field(default=5e-8, ge=0)

    # Verification
    u_grid_points: int = Field(default=33, ge=1)
    u_random_points: int = Field(default=1000, ge=0)
    identity_samples: int = Field(default=200, ge=1)
    soundness_tolerance: float = Field(default=1e-6, ge=0)
    membership_tolerance: float = Field(default=1e-9, ge=0)
    mc_samples: int = Field(default=1_000_000, ge=1)
    grid_resolution: int = Field(default=100, ge=2)
    default_seed: int = Field(default=0)

    # Output
    artifact_dir: Path = Field(default=Path("artifacts"))
    problems_dir: Path = Field(default=Path(__file__).resolve().parents[2] / "problems")
    sweep_workers: int = Field(default=1, ge=1)
    moment_cache: Literal["on", "off"] = Field(default="on")


@lru_cache()
def get_settings() -> Settings:
    """Get cached application settings."""
    return Settings()

