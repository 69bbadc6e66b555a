"""Environment settings for the waveguide LAP command line."""

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from shared.logging import LogLevel
from waveguide.parallel import default_threads


class Settings(BaseSettings):
    """Application settings loaded from LAP_* environment variables or .env."""

    model_config = SettingsConfigDict(
        env_prefix="LAP_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Worker threads for independent solves (overridden by --threads)
    threads: int = Field(default_factory=default_threads, ge=1)

    # Output
    output_dir: Path = Path("out")
    write_svg: bool = False

    # Pole safety: evaluate the singularity indicator before every node solve
    check_poles: bool = False
    near_pole_threshold: float = Field(default=1e-8, gt=0.0)

    # Logging
    log_level: LogLevel = "INFO"
    log_json: bool = False


settings = Settings()
