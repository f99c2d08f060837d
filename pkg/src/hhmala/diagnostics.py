"""
Effective sample size, eigenvector recovery distance and condition numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from loguru import logger
from scipy import fft
from scipy import linalg as sla

from .errors import SingularCovarianceError, StuckChainError
from .linalg import sym_eig
from .preconditioners import Preconditioner

ESTIMATOR = "geyer_initial_positive"
MIN_SAMPLES = 100
MAX_STUCK_FRACTION = 0.05


@dataclass(frozen=True)
class EssReport:
    per_coordinate_ess: np.ndarray
    median_ess: float
    n_samples: int
    estimator: str = ESTIMATOR
    stuck_coordinates: Tuple[int, ...] = field(default_factory=tuple)


def _autocorrelation(x: np.ndarray) -> np.ndarray:
    """Biased autocorrelation of a centred series via zero-padded FFT."""
    n = x.shape[0]
    size = fft.next_fast_len(2 * n)
    spectrum = fft.rfft(x, size)
    acov = fft.irfft(spectrum * np.conjugate(spectrum), size)[:n] / n
    return acov / acov[0]


def ess(series: np.ndarray) -> float:
    """
    Effective sample size n / tau of a scalar chain.

    tau = 1 + 2 sum_k rho_k, with the sum truncated by Geyer's initial positive
    sequence: pairs rho_{2j} + rho_{2j+1} are accumulated until the first
    non-positive pair. The result is clamped to (0, 1.5 n].

    Raises:
        StuckChainError: for a constant series.
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.shape[0]
    if n < MIN_SAMPLES:
        raise ValueError(f"ESS needs at least {MIN_SAMPLES} samples, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("ESS input contains non-finite values")
    if np.ptp(x) == 0.0:
        raise StuckChainError("Series is constant; the chain never moved")
    rho = _autocorrelation(x - x.mean())
    pairs = rho[: 2 * (n // 2)].reshape(-1, 2).sum(axis=1)
    non_positive = np.flatnonzero(pairs <= 0.0)
    stop = non_positive[0] if non_positive.size else pairs.shape[0]
    tau = 2.0 * np.sum(pairs[:stop]) - 1.0
    tau = max(tau, 1.0 / 1.5)
    return float(n / tau)


def median_over_coordinates(samples: np.ndarray, window: float = 0.5) -> EssReport:
    """
    Per-coordinate ESS over the latter ``window`` fraction of an (n, d) chain.

    Stuck coordinates are excluded from the median when they are at most 5% of
    the coordinates; beyond that the whole run is reported stuck.
    """
    if not 0.0 < window <= 1.0:
        raise ValueError(f"window must lie in (0, 1], got {window}")
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    n, d = samples.shape
    kept = samples[n - int(np.ceil(window * n)):]
    values = np.full(d, np.nan)
    stuck = []
    for j in range(d):
        try:
            values[j] = ess(kept[:, j])
        except StuckChainError:
            stuck.append(j)
    if stuck:
        logger.warning(f"{len(stuck)} of {d} coordinates never moved")
        if len(stuck) > MAX_STUCK_FRACTION * d:
            raise StuckChainError(f"{len(stuck)} of {d} coordinates are stuck; run is invalid")
    return EssReport(
        per_coordinate_ess=values,
        median_ess=float(np.median(values[~np.isnan(values)])),
        n_samples=kept.shape[0],
        stuck_coordinates=tuple(stuck),
    )


def sin_squared(v: np.ndarray, w: np.ndarray) -> float:
    """1 - cos^2 of the angle between v and w."""
    v, w = np.asarray(v, dtype=float), np.asarray(w, dtype=float)
    nv, nw = v @ v, w @ w
    if nv == 0.0 or nw == 0.0:
        raise ValueError("sin^2 distance is undefined for a zero vector")
    return float(min(1.0, max(0.0, 1.0 - (v @ w) ** 2 / (nv * nw))))


def condition_number_gaussian(sigma_target: np.ndarray, p: Preconditioner) -> float:
    """lambda_max / lambda_min of L^T Sigma^{-1} L, the preconditioned Hessian of a Gaussian target."""
    L = p.materialise_L()
    try:
        solved = sla.cho_solve(sla.cho_factor(sigma_target), L)
    except np.linalg.LinAlgError as e:
        raise SingularCovarianceError(f"Target covariance is not positive definite: {e}") from e
    A = L.T @ solved
    values, _ = sym_eig((A + A.T) / 2.0)
    if values[-1] <= 0.0:
        raise SingularCovarianceError("Preconditioned Hessian is singular")
    return float(values[0] / values[-1])


def condition_number_bounds(eigenvalues: np.ndarray, m: int, kappa_full: float = 1.0) -> Tuple[float, float]:
    """
    Bounds on the condition number after ideal rank-m eigen preconditioning.

    kappa_full min(l_d, 1) / max(l_{m+1}, 1) <= kappa <= kappa_full max(l_{m+1}, 1) / min(l_d, 1)

    Args:
        eigenvalues: Target covariance eigenvalues, descending.
        kappa_full: Condition number under full-covariance preconditioning (1 for a Gaussian).
    """
    lam = np.asarray(eigenvalues, dtype=float)
    head, tail = max(lam[m], 1.0), min(lam[-1], 1.0)
    return float(kappa_full * tail / head), float(kappa_full * head / tail)
