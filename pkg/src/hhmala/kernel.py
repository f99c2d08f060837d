"""
Preconditioned MALA transition.

Proposal: Y = X + (sigma^2 / 2) M grad log pi(X) + sigma L xi, with M = L L^T.
The Metropolis-Hastings ratio is evaluated in log space; both proposal densities
share the covariance sigma^2 M, so their determinants cancel and only
quadratic forms through L^{-1} are computed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from loguru import logger

from .preconditioners import Preconditioner
from .targets import TargetModel


@dataclass(frozen=True)
class ChainState:
    """Current position with its cached gradient and log-density.

    The rng is the chain's own stream and is advanced in place by every step.
    """
    position: np.ndarray
    cached_grad: np.ndarray
    cached_logdens: float
    rng: np.random.Generator
    iteration: int = 0


@dataclass(frozen=True)
class StepOutcome:
    new_state: ChainState
    accept_prob: float
    accepted: bool
    proposal: np.ndarray


def _evaluate(target: TargetModel, x: np.ndarray):
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        logdens = target.log_density(x)
        grad = target.grad_log_density(x)
    return float(logdens), grad


def init_chain_state(position: np.ndarray, target: TargetModel, rng: np.random.Generator) -> ChainState:
    position = np.asarray(position, dtype=float).copy()
    logdens, grad = _evaluate(target, position)
    if not np.isfinite(logdens) or not np.all(np.isfinite(grad)):
        raise ValueError("Initial position has a non-finite log-density or gradient")
    return ChainState(position=position, cached_grad=grad, cached_logdens=logdens, rng=rng)


def _drift(x: np.ndarray, grad: np.ndarray, p: Preconditioner) -> np.ndarray:
    sigma = p.global_scale
    return x + 0.5 * sigma * sigma * p.apply_M(grad)


def propose(state: ChainState, p: Preconditioner, target: TargetModel, xi: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Draw a Langevin proposal from the current state.

    Args:
        xi: Standard-normal innovation; drawn from the chain's rng when omitted.
    """
    if xi is None:
        xi = state.rng.standard_normal(target.dim)
    return _drift(state.position, state.cached_grad, p) + p.global_scale * p.apply_L(xi)


def _log_q(b: np.ndarray, a: np.ndarray, grad_a: np.ndarray, p: Preconditioner) -> float:
    """log q(b | a) up to the shared normalising constant."""
    r = p.apply_L_inv(b - _drift(a, grad_a, p))
    sigma = p.global_scale
    return float(-(r @ r) / (2.0 * sigma * sigma))


def log_accept_ratio(
    x: np.ndarray,
    y: np.ndarray,
    target: TargetModel,
    p: Preconditioner,
    logdens_x: Optional[float] = None,
    grad_x: Optional[np.ndarray] = None,
    logdens_y: Optional[float] = None,
    grad_y: Optional[np.ndarray] = None,
) -> float:
    """
    log pi(y) - log pi(x) + log q(x | y) - log q(y | x).

    Cached log-densities and gradients are used when given. Returns -inf when the
    proposal's log-density or gradient is not finite.
    """
    if logdens_x is None or grad_x is None:
        logdens_x, grad_x = _evaluate(target, x)
    if logdens_y is None or grad_y is None:
        logdens_y, grad_y = _evaluate(target, y)
    if not np.isfinite(logdens_y) or not np.all(np.isfinite(grad_y)):
        return -np.inf
    return (logdens_y - logdens_x) + _log_q(x, y, grad_y, p) - _log_q(y, x, grad_x, p)


def step(state: ChainState, p: Preconditioner, target: TargetModel) -> StepOutcome:
    """One MALA transition; the acceptance probability is always reported."""
    y = propose(state, p, target)
    logdens_y, grad_y = _evaluate(target, y)
    log_ratio = log_accept_ratio(
        state.position, y, target, p,
        logdens_x=state.cached_logdens, grad_x=state.cached_grad,
        logdens_y=logdens_y, grad_y=grad_y,
    )
    if np.isnan(log_ratio):
        logger.debug(f"Non-finite acceptance ratio at iteration {state.iteration + 1}; rejecting")
        log_ratio = -np.inf
    accept_prob = float(np.exp(min(0.0, log_ratio)))
    accepted = bool(state.rng.uniform() < accept_prob)
    if accepted:
        new_state = ChainState(position=y, cached_grad=grad_y, cached_logdens=logdens_y, rng=state.rng, iteration=state.iteration + 1)
    else:
        new_state = replace(state, iteration=state.iteration + 1)
    return StepOutcome(new_state=new_state, accept_prob=accept_prob, accepted=accepted, proposal=y)
