"""Configuration settings for the LAGO toolkit."""

from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="LAGO_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Output
    output_dir: Path = Path("lago-output")

    # Execution
    max_workers: int = 1
    log_level: str = "INFO"

    # Solver defaults
    c: float = 0.4
    lam: float = 0.01
    epsilon: float = 0.01
    eta: float = 0.01
    alpha: float = 0.01
    max_iters: int = 500


# Global settings instance
settings = Settings()
