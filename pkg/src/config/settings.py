from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Optional


class Settings(BaseSettings):
    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None

    # Reproducibility & Parallelism
    default_seed: int = 20020101
    default_workers: int = 1
    chunk_size: int = 1_000_000

    # Monte Carlo design (five subsamples of one billion raw draws each)
    subsamples: int = 5
    points_per_subsample: int = 1_000_000_000

    # Numerical tolerances
    validation_slack: float = 1e-12
    psd_tolerance: float = 1e-10
    degenerate_threshold: float = 1e-10
    singular_tolerance: float = 1e-12
    max_oracle_dimension: int = 6

    # Curvature & Quadrature
    curvature_step: float = 1e-3
    quadrature_tolerance: float = 1e-10

    # Reports
    report_schema: str = "ewgeo-report/1"

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="EWGEO_",
        case_sensitive=False,
    )


# Global settings instance
settings = Settings()
