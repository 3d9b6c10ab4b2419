"""Application configuration settings."""
from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8")

    # Logging
    log_level: str = "INFO"
    log_dir: str = "logs"

    # Paths
    cache_dir: str = ".starkcheck-cache"
    output_dir: str = "output"

    # Numerical defaults
    default_prec: int = 256
    default_coeffs: int = 4000
    quadrature_tol: float = 1e-5
    default_primes: str = "5,11,13"
    recognition_height: int = 10**6
    max_precision_retries: int = 3

    @property
    def primes_list(self) -> list[int]:
        """Return the default regulator primes as a list."""
        return [int(p.strip()) for p in self.default_primes.split(",") if p.strip()]


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
