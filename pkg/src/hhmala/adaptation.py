"""
Adaptive learning of the preconditioner.

The eigen schemes run the complete adaptive step: mean, Oja eigenvector
update with Gram-Schmidt projection, log global scale, Householder rebuild and
diagonal scales in the rotated frame. The competing schemes (none, diagonal,
dense, diagonal_plus_LR) share the mean and scale updates.

Every update accepts one sample (d,) or one row per lock-step chain (k, d). Each
stage builds one AdaptIncrement per chain, averages them and applies the result
with the shared learning rate.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, fields
from typing import ClassVar, Dict, Optional, Sequence, Type

import numpy as np
from loguru import logger

from .config import AdaptConfig
from .errors import ConfigError, DimensionMismatchError, RankDeficiencyError
from .linalg import HouseholderChain, build_orthogonal_factor, chain_apply, check_orthonormal, gram_schmidt_project, sym_eig
from .preconditioners import DenseFactor, Diagonal, DiagLowRank, EigenChain, Identity, Preconditioner

SCALE_FLOOR = 1e-12
DENSE_CLAMP_RTOL = 1e-10


@dataclass(frozen=True)
class AdaptIncrement:
    """Pre-learning-rate update terms of one chain for one iteration."""
    mean_incr: Optional[np.ndarray] = None
    oja_incr: Optional[np.ndarray] = None
    scale_incr: Optional[float] = None
    diag_incr: Optional[np.ndarray] = None
    cov_incr: Optional[np.ndarray] = None


def average_increments(incrs: Sequence[AdaptIncrement]) -> AdaptIncrement:
    """Field-wise arithmetic mean over chains; a field absent from every increment stays None."""
    if not incrs:
        raise ValueError("No increments to average")
    averaged = {}
    for f in fields(AdaptIncrement):
        values = [getattr(incr, f.name) for incr in incrs]
        present = [v for v in values if v is not None]
        if not present:
            averaged[f.name] = None
            continue
        if len(present) != len(values):
            raise DimensionMismatchError(f"Increment field {f.name} missing for some chains")
        shapes = {np.shape(v) for v in present}
        if len(shapes) != 1:
            raise DimensionMismatchError(f"Increment field {f.name} has mismatched shapes {sorted(shapes)}")
        mean = np.mean(np.stack([np.asarray(v, dtype=float) for v in present]), axis=0)
        averaged[f.name] = float(mean) if np.ndim(mean) == 0 else mean
    return AdaptIncrement(**averaged)


def _rows(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x


def learning_rate(t: int, alpha: float) -> float:
    """gamma_t = t^(-alpha)."""
    if t < 1:
        raise ValueError(f"Learning-rate index must be >= 1, got {t}")
    return float(t) ** (-alpha)


def update_mean(mu: np.ndarray, x: np.ndarray, gamma: float) -> np.ndarray:
    """mu + gamma (x - mu)."""
    incr = average_increments([AdaptIncrement(mean_incr=row - mu) for row in _rows(x)])
    return mu + gamma * incr.mean_incr


def oja_update(V: np.ndarray, x_centered: np.ndarray, gamma_eff: float) -> np.ndarray:
    """
    One projected Oja step V + gamma_eff x_c (x_c^T V), followed by Gram-Schmidt.

    The m inner products x_c^T V are formed first so the update is O(m d). A
    rank collapse during projection skips the step and returns V unchanged.
    """
    incr = average_increments([AdaptIncrement(oja_incr=np.outer(xc, xc @ V)) for xc in _rows(x_centered)])
    try:
        return gram_schmidt_project(V + gamma_eff * incr.oja_incr)
    except RankDeficiencyError as e:
        logger.warning(f"Skipping Oja step: {e}")
        return V.copy()


def update_scale(log_sigma: float, alpha_t, alpha_star: float, gamma: float) -> float:
    """log sigma + gamma (alpha_t - alpha*); alpha_t may hold one acceptance probability per chain."""
    probs = np.atleast_1d(np.asarray(alpha_t, dtype=float))
    if np.any(probs < 0.0) or np.any(probs > 1.0):
        raise ValueError("Acceptance probabilities must lie in [0, 1]")
    incr = average_increments([AdaptIncrement(scale_incr=float(a) - alpha_star) for a in probs])
    return float(log_sigma + gamma * incr.scale_incr)


def _update_squared_scales(D: np.ndarray, incr: np.ndarray, gamma: float) -> np.ndarray:
    D2 = D * D + gamma * (incr - D * D)
    assert np.all(D2 >= 0.0), "squared scale update went negative"
    return np.sqrt(np.maximum(D2, SCALE_FLOOR * SCALE_FLOOR))


def update_eigvals(D: np.ndarray, x: np.ndarray, mu: np.ndarray, chain: HouseholderChain, gamma: float,
                   identity_tail: bool, m: int) -> np.ndarray:
    """
    Marginal scales along the columns of Q: D'^2 = D^2 + gamma ((Q^T x - Q^T mu)^2 - D^2).

    With identity_tail the trailing d - m scales are reset to exactly 1.
    """
    mu_rot = chain_apply(chain, mu, transpose=True)
    rotated = chain_apply(chain, _rows(x).T, transpose=True).T
    incr = average_increments([AdaptIncrement(diag_incr=(r - mu_rot) ** 2) for r in rotated])
    D_new = _update_squared_scales(D, incr.diag_incr, gamma)
    if identity_tail:
        D_new[m:] = 1.0
    return D_new


@dataclass(frozen=True)
class EigenBasis:
    """Adaptive parameters of the eigen schemes: V, D, mu, log sigma and the chain built from V."""
    directions: np.ndarray
    scales: np.ndarray
    mean: np.ndarray
    log_sigma: float
    chain: HouseholderChain

    @classmethod
    def initial(cls, mean: np.ndarray, m: int, sigma0: float) -> "EigenBasis":
        """V = [e_1, ..., e_m], D = I, so Q starts as the identity."""
        d = mean.shape[0]
        directions = np.eye(d, m)
        return cls(directions=directions, scales=np.ones(d), mean=np.asarray(mean, dtype=float).copy(),
                   log_sigma=float(np.log(sigma0)), chain=build_orthogonal_factor(directions))

    @property
    def m(self) -> int:
        return self.directions.shape[1]

    def check_invariants(self, identity_tail: bool = False) -> None:
        check_orthonormal(self.directions)
        if np.any(self.scales <= 0):
            raise ValueError("Eigen scales must stay strictly positive")
        if identity_tail and np.any(self.scales[self.m:] != 1.0):
            raise ValueError("Trailing scales must equal 1 in the eigen_identity scheme")

    def preconditioner(self) -> EigenChain:
        return EigenChain(chain=self.chain, scales=self.scales, global_scale=float(np.exp(self.log_sigma)))


def adapt_step_eigen(basis: EigenBasis, x: np.ndarray, alpha_t, t: int, config: AdaptConfig,
                     identity_tail: Optional[bool] = None) -> EigenBasis:
    """
    The complete adaptive step, in order: learning rates, mean, Oja plus
    Gram-Schmidt, log global scale, chain rebuild, diagonal scales.

    Args:
        t: Learning-rate index (>= 1).
        identity_tail: Reset the trailing d - m scales to 1; defaults to
            ``config.scheme == "eigen_identity"``.
    """
    if identity_tail is None:
        identity_tail = config.scheme == "eigen_identity"
    gamma = learning_rate(t, config.alpha_general)
    gamma_eff = config.c_pca * learning_rate(t, config.alpha_pca)
    rows = _rows(x)

    mean = update_mean(basis.mean, rows, gamma)
    directions = oja_update(basis.directions, rows - mean, gamma_eff)
    log_sigma = update_scale(basis.log_sigma, alpha_t, config.alpha_star, gamma)
    chain = build_orthogonal_factor(directions)
    scales = update_eigvals(basis.scales, rows, mean, chain, gamma, identity_tail, basis.m)
    return EigenBasis(directions=directions, scales=scales, mean=mean, log_sigma=log_sigma, chain=chain)


def adapt_step_diagonal(L_diag: np.ndarray, x: np.ndarray, mu: np.ndarray, gamma: float) -> np.ndarray:
    """L'^2 = L^2 + gamma ((x - mu)^2 - L^2), the eigen diagonal update with Q = I."""
    incr = average_increments([AdaptIncrement(diag_incr=(row - mu) ** 2) for row in _rows(x)])
    return _update_squared_scales(L_diag, incr.diag_incr, gamma)


def adapt_step_dense(L: DenseFactor, x: np.ndarray, mu: np.ndarray, gamma: float) -> DenseFactor:
    """
    Online covariance update A = L L^T + gamma ((x - mu)(x - mu)^T - L L^T).

    A is symmetrised and eigendecomposed; eigenvalues below 1e-10 lambda_max are
    raised to that floor and L' = Q Lambda^{1/2} Q^T. O(d^3) per call.
    """
    incr = average_increments([AdaptIncrement(cov_incr=np.outer(row - mu, row - mu)) for row in _rows(x)])
    current = L.L @ L.L.T
    A = current + gamma * (incr.cov_incr - current)
    values, vectors = sym_eig((A + A.T) / 2.0)
    if values[0] <= 0.0:
        raise ValueError("Dense covariance estimate collapsed to a non-positive matrix")
    floor = DENSE_CLAMP_RTOL * values[0]
    if values[-1] < floor:
        logger.warning(f"Clamping {int(np.sum(values < floor))} dense eigenvalue(s) to {floor:.3e}")
        values = np.maximum(values, floor)
    return DenseFactor.from_eig(np.sqrt(values), vectors, global_scale=L.global_scale)


def default_sigma0(d: int) -> float:
    """Optimal-scaling initial global scale 1.65 d^(-1/6)."""
    return 1.65 * d ** (-1.0 / 6.0)


class Adapter(ABC):
    """
    Owns the adaptive parameters of one scheme for a group of lock-step chains.

    Every scheme adapts the log global scale towards alpha_star. ``update`` is
    called once per iteration with the k chains' latest states and acceptance
    probabilities; the t-th call uses learning-rate index t + 1.
    """

    scheme: ClassVar[str]

    def __init__(self, dim: int, config: AdaptConfig, initial_positions: np.ndarray, sigma0: Optional[float] = None):
        positions = _rows(initial_positions)
        if positions.shape[1] != dim:
            raise DimensionMismatchError(f"Initial positions have dimension {positions.shape[1]}, expected {dim}")
        self.dim = dim
        self.config = config
        self.t = 0
        self.mean = positions.mean(axis=0)
        sigma0 = sigma0 or config.sigma0 or default_sigma0(dim)
        self.log_sigma = float(np.log(sigma0))

    @property
    def sigma(self) -> float:
        return float(np.exp(self.log_sigma))

    @property
    @abstractmethod
    def preconditioner(self) -> Preconditioner:
        """Current preconditioner, carrying the current global scale."""

    @property
    def leading_direction(self) -> np.ndarray:
        """Unit vector the scheme currently treats as its leading direction (Q e_1)."""
        e1 = np.zeros(self.dim)
        e1[0] = 1.0
        return e1

    def update(self, positions: np.ndarray, accept_probs) -> Preconditioner:
        self.t += 1
        self._adapt(_rows(positions), accept_probs, self.t + 1)
        return self.preconditioner

    def _adapt(self, rows: np.ndarray, accept_probs, index: int) -> None:
        gamma = learning_rate(index, self.config.alpha_general)
        self.mean = update_mean(self.mean, rows, gamma)
        self.log_sigma = update_scale(self.log_sigma, accept_probs, self.config.alpha_star, gamma)


class NoneAdapter(Adapter):
    """L = I; only sigma adapts."""

    scheme = "none"

    @property
    def preconditioner(self) -> Identity:
        return Identity(d=self.dim, global_scale=self.sigma)


class DiagonalAdapter(Adapter):
    """L = diag of the running marginal standard deviations."""

    scheme = "diagonal"

    def __init__(self, dim, config, initial_positions, sigma0=None):
        super().__init__(dim, config, initial_positions, sigma0)
        self.scales = np.ones(dim)

    @property
    def preconditioner(self) -> Diagonal:
        return Diagonal(scales=self.scales, global_scale=self.sigma)

    def _adapt(self, rows, accept_probs, index):
        super()._adapt(rows, accept_probs, index)
        gamma = learning_rate(index, self.config.alpha_general)
        self.scales = adapt_step_diagonal(self.scales, rows, self.mean, gamma)


class DenseAdapter(Adapter):
    """L = symmetric square root of the running covariance estimate."""

    scheme = "dense"

    def __init__(self, dim, config, initial_positions, sigma0=None):
        super().__init__(dim, config, initial_positions, sigma0)
        self.factor = DenseFactor.from_eig(np.ones(dim), np.eye(dim))

    @property
    def preconditioner(self) -> DenseFactor:
        return self.factor.with_scale(self.sigma)

    @property
    def leading_direction(self) -> np.ndarray:
        _, vectors = self.factor.eigendecomposition
        return vectors[:, 0]

    def _adapt(self, rows, accept_probs, index):
        super()._adapt(rows, accept_probs, index)
        gamma = learning_rate(index, self.config.alpha_general)
        self.factor = adapt_step_dense(self.factor, rows, self.mean, gamma)


class EigenAdapter(Adapter):
    """Householder eigen preconditioner; eigen_identity resets the trailing scales to 1."""

    scheme = "eigen"
    identity_tail = False

    def __init__(self, dim, config, initial_positions, sigma0=None):
        super().__init__(dim, config, initial_positions, sigma0)
        if not 1 <= config.m <= dim:
            raise ConfigError(f"m must lie in [1, {dim}], got {config.m}", key="m")
        self.basis = EigenBasis.initial(self.mean, config.m, self.sigma)

    @property
    def preconditioner(self) -> EigenChain:
        return self.basis.preconditioner()

    @property
    def leading_direction(self) -> np.ndarray:
        return self.basis.directions[:, 0]

    def _adapt(self, rows, accept_probs, index):
        self.basis = adapt_step_eigen(self.basis, rows, accept_probs, index, self.config, identity_tail=self.identity_tail)
        self.mean = self.basis.mean
        self.log_sigma = self.basis.log_sigma


class EigenIdentityAdapter(EigenAdapter):
    scheme = "eigen_identity"
    identity_tail = True


class FrozenAdapter(Adapter):
    """Keeps a pre-chain preconditioner (diag + low-rank from VI) fixed; only sigma adapts."""

    scheme = "diagonal_plus_LR"

    def __init__(self, dim, config, initial_positions, sigma0=None, frozen: Optional[DiagLowRank] = None):
        super().__init__(dim, config, initial_positions, sigma0)
        if frozen is None:
            raise ConfigError("diagonal_plus_LR needs the preconditioner learned before the chain", key="scheme")
        if frozen.dim != dim:
            raise DimensionMismatchError(f"Frozen preconditioner has dimension {frozen.dim}, expected {dim}")
        self.frozen = frozen
        self._leading: Optional[np.ndarray] = None

    @property
    def preconditioner(self) -> Preconditioner:
        return self.frozen.with_scale(self.sigma)

    @property
    def leading_direction(self) -> np.ndarray:
        if self._leading is None:
            _, vectors = sym_eig(self.frozen.materialise_M())
            self._leading = vectors[:, 0]
        return self._leading


ADAPTERS: Dict[str, Type[Adapter]] = {
    cls.scheme: cls for cls in (NoneAdapter, DiagonalAdapter, DenseAdapter, EigenAdapter, EigenIdentityAdapter, FrozenAdapter)
}


def get_adapter(scheme: str, dim: int, config: AdaptConfig, initial_positions: np.ndarray, sigma0: Optional[float] = None,
                frozen: Optional[DiagLowRank] = None) -> Adapter:
    """
    Factory function to create an adapter for a scheme.

    Args:
        scheme: One of none, diagonal, dense, eigen, eigen_identity, diagonal_plus_LR.
        frozen: Pre-chain preconditioner, required for diagonal_plus_LR.

    Returns:
        Adapter instance initialised at the mean of ``initial_positions``.
    """
    if scheme not in ADAPTERS:
        raise ConfigError(f"Unknown scheme: {scheme}. Supported: {', '.join(ADAPTERS)}", key="scheme")
    if scheme == FrozenAdapter.scheme:
        return FrozenAdapter(dim, config, initial_positions, sigma0, frozen=frozen)
    return ADAPTERS[scheme](dim, config, initial_positions, sigma0)
