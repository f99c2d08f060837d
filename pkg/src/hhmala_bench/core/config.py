from pathlib import Path
from typing import Optional
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Logging (unset: the logging section of the library config)
    log_level: Optional[str] = None
    log_format: Optional[str] = None

    # Worker processes used by `run` when --threads is not given
    default_threads: int = 1

    # Output directory used by `run` when --out is not given
    default_out_dir: str = "results"

    # Library defaults (adaptation and VI hyperparameters)
    library_config_path: Optional[str] = "config.yaml"

    title: str = "householder-mala bench"
    version: str = "0.1.0"
    model_config = {
        "env_prefix": "HHMALA_",
        "env_file": str(Path(__file__).parent.parent.parent.parent / ".env"),  # Look for .env in project root
        "extra": "ignore"
    }


settings = Settings()
