"""
Pre-chain reverse-KL fit of a diagonal plus low-rank preconditioner.

The variational family is N(mu, L L^T) with the symmetric factor
L = D + V V^T, D = diag(Delta^2). Stochastic gradient descent on
KL(q || pi) = -log|det L| - E log pi(mu + L xi) + const uses reparametrised
batches x_b = mu + L xi_b. The learned L is handed to the chain frozen.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger
from scipy import linalg as sla

from .config import VIConfig
from .errors import DimensionMismatchError
from .preconditioners import DiagLowRank, smw_factor
from .targets import TargetModel


@dataclass(frozen=True)
class VIState:
    mu: np.ndarray
    delta: np.ndarray
    V: np.ndarray
    iteration: int = 0

    @classmethod
    def initial(cls, mu: np.ndarray, rank: int, v0_scale: float = 0.1) -> "VIState":
        """Delta = 1 and V = v0_scale * ones(d, rank)."""
        d = mu.shape[0]
        return cls(mu=np.asarray(mu, dtype=float).copy(), delta=np.ones(d), V=np.full((d, rank), v0_scale))

    @property
    def diag(self) -> np.ndarray:
        return self.delta * self.delta

    def __post_init__(self):
        if self.V.shape[0] != self.mu.shape[0] or self.delta.shape != self.mu.shape:
            raise DimensionMismatchError("VI state components have inconsistent dimensions")


def vi_to_preconditioner(state: VIState, global_scale: float = 1.0) -> DiagLowRank:
    """Freeze the state into L = diag(Delta^2) + V V^T."""
    return DiagLowRank(diag=state.diag, lowrank=state.V, global_scale=global_scale)


@dataclass(frozen=True)
class LGradient:
    """
    Factored batch gradient grad_L = -L^{-1} - (1/B) sum_b grad log pi(x_b) xi_b^T.

    Only the diagonal and the action of the symmetrised gradient on a thin matrix
    are needed by the descent step; neither materialises a d x d array.
    """
    precond: DiagLowRank
    noise: np.ndarray
    grads: np.ndarray

    @property
    def batch_size(self) -> int:
        return self.noise.shape[0]

    def inverse_diagonal(self) -> np.ndarray:
        """diag((D + V V^T)^{-1}) in O(m^2 d)."""
        D, V = self.precond.diag, self.precond.lowrank
        W = V / D[:, None]
        factor = smw_factor(D, V)
        return 1.0 / D - np.sum(W * sla.cho_solve(factor, W.T).T, axis=1)

    def diagonal(self) -> np.ndarray:
        return -self.inverse_diagonal() - np.mean(self.grads * self.noise, axis=0)

    def symmetrised_action(self, V: np.ndarray) -> np.ndarray:
        """(grad_L + grad_L^T) V."""
        B = self.batch_size
        inv_part = -2.0 * self.precond.apply_L_inv(V)
        G, Xi = self.grads.T, self.noise.T
        return inv_part - (G @ (Xi.T @ V) + Xi @ (G.T @ V)) / B

    def to_dense(self) -> np.ndarray:
        d = self.precond.dim
        return -self.precond.apply_L_inv(np.eye(d)) - (self.grads.T @ self.noise) / self.batch_size


def vi_grad_L(state: VIState, noise: np.ndarray, batch_grads: np.ndarray) -> LGradient:
    """
    Batch L-gradient of the reverse KL.

    Args:
        noise: (B, d) standard-normal draws xi_b used to form x_b = mu + L xi_b.
        batch_grads: (B, d) values of grad log pi(x_b).
    """
    noise = np.atleast_2d(np.asarray(noise, dtype=float))
    batch_grads = np.atleast_2d(np.asarray(batch_grads, dtype=float))
    if noise.shape != batch_grads.shape or noise.shape[1] != state.mu.shape[0]:
        raise DimensionMismatchError(f"Batch shapes {noise.shape} and {batch_grads.shape} do not match dimension {state.mu.shape[0]}")
    return LGradient(precond=vi_to_preconditioner(state), noise=noise, grads=batch_grads)


def _sample_batch(state: VIState, target: TargetModel, rng: np.random.Generator, batch_size: int):
    precond = vi_to_preconditioner(state)
    noise = rng.standard_normal((batch_size, state.mu.shape[0]))
    xs = state.mu + precond.apply_L(noise.T).T
    return precond, noise, xs


def vi_descend(state: VIState, target: TargetModel, rng: np.random.Generator, config: VIConfig) -> VIState:
    """
    One descent iteration on mu, Delta and V.

    The mean moves along +mean(grad log pi), the descent direction of the reverse
    KL. Delta entries that would cross config.delta_floor are clamped to it.
    """
    _, noise, xs = _sample_batch(state, target, rng, config.batch_size)
    grads = np.stack([target.grad_log_density(x) for x in xs])
    grad_L = vi_grad_L(state, noise, grads)

    mu = state.mu + config.gamma_mu * grads.mean(axis=0)
    delta = state.delta - config.gamma_delta * state.delta * grad_L.diagonal()
    clamped = delta < config.delta_floor
    if np.any(clamped):
        logger.warning(f"VI iteration {state.iteration + 1}: clamping {int(np.sum(clamped))} Delta entries to {config.delta_floor}")
        delta = np.where(clamped, config.delta_floor, delta)
    V = state.V - config.gamma_v * grad_L.symmetrised_action(state.V)
    return VIState(mu=mu, delta=delta, V=V, iteration=state.iteration + 1)


def log_abs_det(state: VIState) -> float:
    """log|det(D + V V^T)| via the matrix determinant lemma."""
    D, V = state.diag, state.V
    lower, _ = smw_factor(D, V)
    return float(np.sum(np.log(D)) + 2.0 * np.sum(np.log(np.abs(np.diag(lower)))))


def vi_surrogate(state: VIState, target: TargetModel, rng: np.random.Generator, batch_size: int = 1000) -> float:
    """Monte Carlo estimate of -log|det L| - E log pi(mu + L xi), the reverse KL up to a constant."""
    _, _, xs = _sample_batch(state, target, rng, batch_size)
    return -log_abs_det(state) - float(np.mean([target.log_density(x) for x in xs]))


def run_vi(target: TargetModel, rank: int, config: VIConfig, rng: np.random.Generator,
           initial_mean: Optional[np.ndarray] = None) -> VIState:
    """
    Run config.iterations descent steps from Delta = 1, V = v0_scale * ones.

    Args:
        initial_mean: Starting mu; the target's mode, else the origin, when omitted.
    """
    if initial_mean is None:
        initial_mean = target.mode if target.mode is not None else np.zeros(target.dim)
    state = VIState.initial(initial_mean, rank, config.v0_scale)
    logger.info(f"Fitting diagonal plus rank-{rank} preconditioner to {target.name} (d={target.dim}, {config.iterations} iterations)")
    for _ in range(config.iterations):
        state = vi_descend(state, target, rng, config)
        if state.iteration % 1000 == 0:
            logger.debug(f"VI iteration {state.iteration}: |mu| = {np.linalg.norm(state.mu):.4f}, min Delta = {state.delta.min():.3e}")
    logger.info(f"VI finished: min Delta = {state.delta.min():.3e}, |V|_F = {np.linalg.norm(state.V):.4f}")
    return state
