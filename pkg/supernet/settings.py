# supernet/settings.py

from functools import lru_cache
from typing import Literal, Optional

from dotenv import load_dotenv
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    """Process-wide knobs read from SNET_* environment variables or a .env file."""

    threads: Optional[int] = Field(None, ge=1, description="Cap on parallel training sessions")
    log_level: str = Field("INFO", description="Logging level name")
    matmul: Literal["exact", "blas"] = Field(
        "exact", description="exact: fixed ascending-k accumulation; blas: numpy matmul"
    )

    model_config = SettingsConfigDict(env_prefix="SNET_", env_file=".env", extra="ignore")

    @field_validator("log_level")
    def validate_log_level(cls, value: str) -> str:
        value = value.upper()
        if value not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {value!r}")
        return value


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
