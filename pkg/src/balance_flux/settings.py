"""
Configuration management for balance-flux
Process-wide defaults; per-run parameters live in the JSON run config.
"""

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

_ENV = dict(env_file=".env", env_file_encoding="utf-8", case_sensitive=False, extra="ignore")


class ToleranceSettings(BaseSettings):
    """Default numerical tolerances"""

    model_config = SettingsConfigDict(env_prefix="BALANCE_FLUX_", **_ENV)

    tol: float = Field(default=1e-8, gt=0.0)
    quadrature_tol: float = Field(default=1e-10, gt=0.0)
    weak_form_tol: float = Field(default=1e-6, gt=0.0)
    discrete_balance_tol: float = Field(default=1e-12, gt=0.0)


class SolverSettings(BaseSettings):
    """Finite-volume solver defaults"""

    model_config = SettingsConfigDict(env_prefix="BALANCE_FLUX_", **_ENV)

    cfl: float = Field(default=0.45, gt=0.0, lt=1.0)
    gravity: float = Field(default=9.81, gt=0.0)
    newton_tol: float = Field(default=1e-12, gt=0.0)
    newton_max_iter: int = Field(default=100, ge=1)


class OutputSettings(BaseSettings):
    """Output and logging settings"""

    model_config = SettingsConfigDict(env_prefix="BALANCE_FLUX_", **_ENV)

    out_dir: str = Field(default="results")
    log_level: str = Field(default="INFO", validation_alias="LOG_LEVEL")
    float_digits: int = Field(default=17, ge=1, le=17)


class Settings(BaseSettings):
    """Main application settings"""

    model_config = SettingsConfigDict(**_ENV)

    tolerances: ToleranceSettings = Field(default_factory=ToleranceSettings)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()
