from functools import lru_cache
from typing import Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Toolchain settings loaded from environment variables (prefix LUTC_) and .env."""

    # Truth tables
    table_gen_limit: int = 24
    workers: int = 4

    # Logging
    log_level: str = "INFO"
    log_config: str = "logging.ini"

    # Reproducibility
    default_seed: int = 0
    torch_threads: int = 1

    # Verification
    verify_samples: int = 1000

    # Output
    output_dir: str = "build"

    # Datasets
    mnist_dir: Optional[str] = None

    class Config:
        env_prefix = "LUTC_"
        env_file = ".env"
        case_sensitive = False
        extra = "ignore"


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
