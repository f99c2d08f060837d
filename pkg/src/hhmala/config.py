"""
Configuration management for the hhmala sampling library.
"""

import os
from pathlib import Path
from typing import Literal, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

# Load environment variables
load_dotenv()


Scheme = Literal["none", "diagonal", "dense", "eigen", "eigen_identity", "diagonal_plus_LR"]


class AdaptConfig(BaseModel):
    """Hyperparameters of the adaptive step (Oja, mean, scale and diagonal learning rates)."""
    m: int = Field(default=3, ge=1, description="Number of eigenvectors learned by the eigen schemes")
    alpha_pca: float = Field(default=0.1, description="Exponent of the c * t^-alpha Oja learning rate")
    c_pca: float = Field(default=1.0, gt=0, description="Coefficient of the Oja learning rate")
    alpha_general: float = Field(default=0.7, description="Exponent of every other learning rate")
    alpha_star: float = Field(default=0.574, description="Target acceptance rate of the global scale")
    scheme: Scheme = Field(default="eigen", description="Adaptive scheme")
    sigma0: Optional[float] = Field(default=None, gt=0, description="Initial global scale; 1.65 d^(-1/6) when unset")

    @field_validator("alpha_pca", "alpha_general", "alpha_star")
    @classmethod
    def _unit_interval(cls, value: float) -> float:
        if not 0.0 < value <= 1.0:
            raise ValueError(f"must lie in (0, 1], got {value}")
        return value


class VIConfig(BaseModel):
    """Settings of the pre-chain reverse-KL gradient descent."""
    gamma_mu: float = Field(default=1e-3, ge=0, description="Mean learning rate")
    gamma_delta: float = Field(default=1e-3, ge=0, description="Diagonal (Delta) learning rate")
    gamma_v: float = Field(default=1e-3, ge=0, description="Low-rank learning rate")
    batch_size: int = Field(default=10, ge=1, description="Monte Carlo batch size B")
    iterations: int = Field(default=5000, ge=0, description="Number of descent iterations N")
    v0_scale: float = Field(default=0.1, description="Entry value of the initial low-rank factor")
    delta_floor: float = Field(default=1e-8, gt=0, description="Clamp applied when a Delta entry crosses zero")


class LoggingConfig(BaseModel):
    """Configuration for logging."""
    level: str = Field(default="INFO", description="Logging level")
    format: str = Field(default="{time:YYYY-MM-DD HH:mm:ss} | {level} | {name}:{function}:{line} - {message}")


class Config(BaseModel):
    """Main configuration class."""
    adaptation: AdaptConfig = Field(default_factory=AdaptConfig)
    vi: VIConfig = Field(default_factory=VIConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    @classmethod
    def from_yaml(cls, config_path: str = "config.yaml") -> "Config":
        """Load configuration from YAML file."""
        config_file = Path(config_path)
        if not config_file.exists():
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        with open(config_file, "r") as f:
            config_data = yaml.safe_load(f) or {}

        return cls(**config_data)

    @classmethod
    def from_env(cls) -> "Config":
        """Load configuration from environment variables."""
        sigma0 = os.getenv("HHMALA_SIGMA0")
        return cls(
            adaptation=AdaptConfig(
                m=int(os.getenv("HHMALA_M", "3")),
                alpha_pca=float(os.getenv("HHMALA_ALPHA_PCA", "0.1")),
                c_pca=float(os.getenv("HHMALA_C_PCA", "1.0")),
                alpha_general=float(os.getenv("HHMALA_ALPHA_GENERAL", "0.7")),
                alpha_star=float(os.getenv("HHMALA_ALPHA_STAR", "0.574")),
                scheme=os.getenv("HHMALA_SCHEME", "eigen"),
                sigma0=float(sigma0) if sigma0 else None,
            ),
            vi=VIConfig(
                gamma_mu=float(os.getenv("HHMALA_VI_GAMMA_MU", "1e-3")),
                gamma_delta=float(os.getenv("HHMALA_VI_GAMMA_DELTA", "1e-3")),
                gamma_v=float(os.getenv("HHMALA_VI_GAMMA_V", "1e-3")),
                batch_size=int(os.getenv("HHMALA_VI_BATCH_SIZE", "10")),
                iterations=int(os.getenv("HHMALA_VI_ITERATIONS", "5000")),
            ),
            logging=LoggingConfig(
                level=os.getenv("HHMALA_LOG_LEVEL", "INFO"),
                format=os.getenv("HHMALA_LOG_FORMAT", "{time:YYYY-MM-DD HH:mm:ss} | {level} | {name}:{function}:{line} - {message}")
            )
        )
