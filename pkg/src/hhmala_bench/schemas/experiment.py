import hashlib
import json
import math
import re
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from hhmala.config import AdaptConfig, Scheme, VIConfig

TargetName = Literal["tailored_gaussian", "diag_lowrank_gaussian", "logistic_regression", "xy_mean_field"]
InitMode = Literal["equilibrium", "mode"]
RunStatus = Literal["ok", "stuck", "failed"]

_SQRT_ITERATIONS = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*\*?\s*sqrt\(\s*d\s*\)\s*$")
XY_MAX_DIM = 50

# Injective integer codes used in seed derivation
TARGET_CODES = {"tailored_gaussian": 0, "diag_lowrank_gaussian": 1, "logistic_regression": 2, "xy_mean_field": 3}
SCHEME_CODES = {"none": 0, "diagonal": 1, "dense": 2, "eigen": 3, "eigen_identity": 4, "diagonal_plus_LR": 5}


class ExperimentConfig(BaseModel):
    """A grid of (scheme, dimension, repetition) cells on one target family."""
    target: TargetName = Field(..., description="Target family")
    scheme: List[Scheme] = Field(..., min_length=1, description="Adaptive schemes to compare (comma-separated)")
    dims: List[int] = Field(..., min_length=1, description="Dimensions d (comma-separated)")

    # Target parameters
    K: int = Field(default=3, ge=1, description="Large eigenvalues of the tailored Gaussian")
    rank: int = Field(default=32, ge=1, description="Rank of the diagonal plus low-rank Gaussian")
    beta: float = Field(default=100.0, ge=0, description="Inverse temperature of the XY model")
    lam: float = Field(default=0.01, gt=0, description="Prior strength of the logistic regression")

    # Protocol
    iterations: str = Field(default="500*sqrt(d)", description="Iterations per run: integer or 'c*sqrt(d)'")
    chains: int = Field(default=2, ge=1, description="Lock-step chains sharing one adapter")
    repetitions: int = Field(default=15, ge=1, description="Runs per (scheme, d)")
    burn_in: float = Field(default=0.5, ge=0, lt=1, description="Leading fraction of each run discarded before ESS")
    seed: int = Field(default=0, ge=0, description="Master seed")
    init: Optional[InitMode] = Field(default=None, description="equilibrium for Gaussian targets, mode otherwise, when unset")
    trace_every: int = Field(default=10, ge=0, description="Iterations between sin^2 recovery samples (0 disables)")
    timing: bool = Field(default=True, description="Record wall-clock columns (off for byte-reproducible CSV)")

    # Adaptation
    m: int = Field(default=3, ge=1, description="Eigenvectors learned by the eigen schemes")
    lr_rank: Optional[int] = Field(default=None, ge=1, description="Low-rank rank of diagonal_plus_LR; m when unset")
    alpha_pca: float = Field(default=0.1, description="Oja learning-rate exponent")
    c_pca: float = Field(default=1.0, gt=0, description="Oja learning-rate coefficient")
    alpha_general: float = Field(default=0.7, description="Exponent of the other learning rates")
    alpha_star: float = Field(default=0.574, description="Target acceptance rate")
    sigma0: Optional[float] = Field(default=None, gt=0, description="Initial global scale")

    # Pre-chain VI (diagonal_plus_LR)
    vi_iterations: int = Field(default=5000, ge=0, description="VI descent iterations")
    vi_batch_size: int = Field(default=10, ge=1, description="VI Monte Carlo batch size")
    vi_gamma_mu: float = Field(default=1e-3, ge=0, description="VI mean learning rate")
    vi_gamma_delta: float = Field(default=1e-3, ge=0, description="VI diagonal learning rate")
    vi_gamma_v: float = Field(default=1e-3, ge=0, description="VI low-rank learning rate")

    model_config = {"extra": "forbid"}

    @field_validator("dims")
    @classmethod
    def _positive_dims(cls, dims: List[int]) -> List[int]:
        if any(d <= 0 for d in dims):
            raise ValueError(f"dimensions must be positive, got {dims}")
        return dims

    @field_validator("alpha_pca", "alpha_general", "alpha_star")
    @classmethod
    def _unit_interval(cls, value: float) -> float:
        if not 0.0 < value <= 1.0:
            raise ValueError(f"must lie in (0, 1], got {value}")
        return value

    @field_validator("iterations", mode="before")
    @classmethod
    def _iterations_expression(cls, value) -> str:
        text = str(value).strip()
        if not (text.isdigit() or _SQRT_ITERATIONS.match(text)):
            raise ValueError(f"expected an integer or 'c*sqrt(d)', got {text!r}")
        return text

    @model_validator(mode="after")
    def _check_grid(self) -> "ExperimentConfig":
        if self.target == "xy_mean_field" and max(self.dims) > XY_MAX_DIM:
            raise ValueError(f"xy_mean_field mixes poorly above d = {XY_MAX_DIM}; got dims {self.dims}")
        return self

    def iterations_for(self, d: int) -> int:
        match = _SQRT_ITERATIONS.match(self.iterations)
        if match:
            return int(math.ceil(float(match.group(1)) * math.sqrt(d)))
        return int(self.iterations)

    def init_mode(self) -> InitMode:
        if self.init is not None:
            return self.init
        return "equilibrium" if self.target in ("tailored_gaussian", "diag_lowrank_gaussian") else "mode"

    def adapt_config(self, scheme: str) -> AdaptConfig:
        return AdaptConfig(
            m=self.m, alpha_pca=self.alpha_pca, c_pca=self.c_pca, alpha_general=self.alpha_general,
            alpha_star=self.alpha_star, scheme=scheme, sigma0=self.sigma0,
        )

    def vi_rank(self) -> int:
        return self.lr_rank if self.lr_rank is not None else self.m

    def vi_config(self) -> VIConfig:
        return VIConfig(
            gamma_mu=self.vi_gamma_mu, gamma_delta=self.vi_gamma_delta, gamma_v=self.vi_gamma_v,
            batch_size=self.vi_batch_size, iterations=self.vi_iterations,
        )

    def cells(self) -> List[Tuple[str, int, int]]:
        """Grid order: scheme, then dimension, then repetition."""
        return [(scheme, d, rep) for scheme in self.scheme for d in self.dims for rep in range(self.repetitions)]

    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


class RunRecord(BaseModel):
    """Outcome of one grid cell"""
    config_hash: str
    target: str
    scheme: str
    d: int
    seed: int
    median_ess: Optional[float] = None
    wall_seconds: Optional[float] = None
    ess_per_second: Optional[float] = None
    acceptance_rate: Optional[float] = Field(default=None, ge=0, le=1)
    final_sin2: Optional[float] = None
    status: RunStatus = "ok"
    trace: Optional[List[Tuple[int, float]]] = Field(default=None, description="(iteration, sin^2) recovery samples")
    vi_summary: Optional[dict] = None
    error: Optional[str] = None


CSV_COLUMNS = [
    "target", "scheme", "d", "seed", "median_ess", "wall_seconds",
    "ess_per_second", "acceptance_rate", "final_sin2", "status",
]
