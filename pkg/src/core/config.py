from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field
from typing import Optional
import os


class Settings(BaseSettings):
    APP_NAME: str = Field(default="CiaoSR toolkit", alias="CIAOSR_APP_NAME")
    ENVIRONMENT: str = Field(default="development", alias="CIAOSR_ENVIRONMENT")

    THREADS: int = Field(default=1, ge=1, alias="CIAOSR_THREADS")
    DEBUG_FINITE_CHECKS: bool = Field(default=False, alias="CIAOSR_DEBUG")

    QUERY_CHUNK: int = Field(default=30000, ge=1, alias="CIAOSR_QUERY_CHUNK")
    NONLOCAL_MAX_PIXELS: int = Field(default=96 * 96, ge=1, alias="CIAOSR_NONLOCAL_MAX_PIXELS")
    NONLOCAL_TILE: int = Field(default=96, ge=1, alias="CIAOSR_NONLOCAL_TILE")

    BASELINE_CKPT: Optional[str] = Field(default=None, alias="CIAOSR_BASELINE_CKPT")

    LOG_LEVEL: str = Field(default="INFO", alias="CIAOSR_LOG_LEVEL")
    LOG_FORMAT: str = Field(default="console", alias="CIAOSR_LOG_FORMAT")

    model_config = SettingsConfigDict(
        case_sensitive=True,
        env_file=os.getenv("ENV_FILE", ".env"),
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Convenience accessors (snake_case) for callers using lowercase names
    @property
    def threads(self) -> int:
        return self.THREADS

    @property
    def query_chunk(self) -> int:
        return self.QUERY_CHUNK

    @property
    def nonlocal_max_pixels(self) -> int:
        return self.NONLOCAL_MAX_PIXELS

    @property
    def nonlocal_tile(self) -> int:
        return self.NONLOCAL_TILE


settings = Settings()
