# cyclereward/core/config.py

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Process-level knobs. Only log verbosity lives here: every artifact the
    commands write is a function of the run config and its seed alone.
    """
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"

    # pydantic v2 settings
    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="CYCLEREWARD_",
        extra="ignore",   # ignore unknown env vars instead of raising errors
    )

settings = Settings()
