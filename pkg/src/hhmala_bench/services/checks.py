"""
In-process invariant checks run by ``hhmala-bench check``.

Each check is a small seeded numerical experiment returning a CheckResult;
none of them needs more than a few seconds.
"""

from dataclasses import dataclass
from typing import Callable, List

import numpy as np
from loguru import logger

from hhmala.adaptation import adapt_step_dense
from hhmala.diagnostics import condition_number_bounds, condition_number_gaussian, ess
from hhmala.linalg import build_orthogonal_factor, gram_schmidt_project, sym_eig
from hhmala.preconditioners import DenseFactor, ideal_eigen_preconditioner
from hhmala.targets import (
    gaussian_from_covariance,
    make_diag_lowrank_gaussian,
    make_logistic_regression,
    make_tailored_gaussian,
    sample_exact,
    xy_mean_field,
)
from hhmala.vi import VIState, vi_grad_L


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_column_property() -> CheckResult:
    """Column i of the materialised Householder product equals v_i."""
    rng = np.random.default_rng(20240101)
    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(11, 201))
        m = int(rng.integers(1, 11))
        V = gram_schmidt_project(rng.standard_normal((d, m)))
        Q = build_orthogonal_factor(V).to_dense()
        worst = max(worst, float(np.max(np.abs(Q[:, :m] - V))))
    return CheckResult("householder column property", worst <= 1e-10, f"max error {worst:.2e}")


def check_ideal_spectrum() -> CheckResult:
    """L^{-1} Sigma L^{-T} has spectrum {1 (x m), lambda_{m+1}, ..., lambda_d}."""
    m = 3
    target = make_tailored_gaussian(50, m, seed=7)
    meta = target.gaussian
    p = ideal_eigen_preconditioner(meta.eigenvalues, meta.eigenvectors, m)
    Linv = p.apply_L_inv(np.eye(50))
    A = Linv @ meta.covariance @ Linv.T
    values, _ = sym_eig((A + A.T) / 2.0)
    expected = np.sort(np.concatenate([np.ones(m), meta.eigenvalues[m:]]))[::-1]
    err = float(np.max(np.abs(values - expected)))
    return CheckResult("ideal preconditioner spectrum", err <= 1e-8, f"max error {err:.2e}")


def check_condition_sandwich() -> CheckResult:
    """Condition number after ideal preconditioning stays inside its lower and upper bounds."""
    failures = []
    for seed in range(10):
        d, m = 40, 3
        target = make_tailored_gaussian(d, m, seed=seed) if seed % 2 == 0 else make_diag_lowrank_gaussian(d, 8, seed=seed)
        meta = target.gaussian
        p = ideal_eigen_preconditioner(meta.eigenvalues, meta.eigenvectors, m)
        kappa = condition_number_gaussian(meta.covariance, p)
        lower, upper = condition_number_bounds(meta.eigenvalues, m)
        if not (lower * (1 - 1e-6) <= kappa <= upper * (1 + 1e-6)):
            failures.append(seed)
    return CheckResult("condition-number bounds", not failures, f"violations at seeds {failures}" if failures else "10/10 within bounds")


def check_dense_recovery() -> CheckResult:
    """Streaming exact samples through the dense update recovers the covariance."""
    rng = np.random.default_rng(11)
    d = 20
    A = rng.standard_normal((d, d))
    target = gaussian_from_covariance(np.zeros(d), A @ A.T / d + np.eye(d))
    sigma = target.gaussian.covariance
    factor = DenseFactor.from_eig(np.ones(d), np.eye(d))
    mu = np.zeros(d)
    for t in range(1, 20001):
        x = sample_exact(target, rng)
        gamma = (t + 1) ** -0.7
        mu = mu + gamma * (x - mu)
        factor = adapt_step_dense(factor, x, mu, gamma)
    err = float(np.linalg.norm(factor.L @ factor.L.T - sigma) / np.linalg.norm(sigma))
    return CheckResult("dense covariance recovery", err <= 0.2, f"relative Frobenius error {err:.3f}")


def _ar1(rho: float, n: int, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal(n) * np.sqrt(1.0 - rho * rho)
    x = np.empty(n)
    x[0] = rng.standard_normal()
    for i in range(1, n):
        x[i] = rho * x[i - 1] + noise[i]
    return x


def check_ess_oracle() -> CheckResult:
    """ESS of AR(1) series against n (1 - rho) / (1 + rho)."""
    rng = np.random.default_rng(3)
    n = 100_000
    errors = []
    for rho in (0.0, 0.5, 0.9):
        expected = n * (1 - rho) / (1 + rho)
        errors.append(abs(ess(_ar1(rho, n, rng)) / expected - 1.0))
    worst = max(errors)
    return CheckResult("ESS AR(1) oracle", worst <= 0.15, f"worst relative error {worst:.3f}")


def check_vi_stationarity() -> CheckResult:
    """Batch L-gradient vanishes at the symmetric square root of a diag plus low-rank covariance."""
    rng = np.random.default_rng(5)
    d = 5
    delta = np.array([2.0, 1.8, 2.2, 1.9, 2.1])
    V = rng.standard_normal((d, 2)) * 0.5
    L = np.diag(delta ** 2) + V @ V.T
    target = gaussian_from_covariance(np.zeros(d), L @ L)
    state = VIState(mu=np.zeros(d), delta=delta, V=V)
    noise = rng.standard_normal((10_000, d))
    grads = np.stack([target.grad_log_density(L @ xi) for xi in noise])
    norm = float(np.linalg.norm(vi_grad_L(state, noise, grads).to_dense()))
    return CheckResult("VI stationarity", norm <= 0.05, f"|grad_L|_F = {norm:.4f}")


def _fd_error(target, rng: np.random.Generator, scale: float = 1.0) -> float:
    worst = 0.0
    for _ in range(10):
        x = (target.mode if target.mode is not None else np.zeros(target.dim)) + scale * rng.standard_normal(target.dim)
        g = target.grad_log_density(x)
        fd = np.empty(target.dim)
        for i in range(target.dim):
            h = 1e-5 * (1.0 + abs(x[i]))
            e = np.zeros(target.dim)
            e[i] = h
            fd[i] = (target.log_density(x + e) - target.log_density(x - e)) / (2 * h)
        worst = max(worst, float(np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-12)))
    return worst


def check_gradients() -> CheckResult:
    """Analytic gradients against central finite differences; XY against the double-sum formula."""
    rng = np.random.default_rng(13)
    errors = {
        "tailored_gaussian": _fd_error(make_tailored_gaussian(20, 3, seed=1), rng),
        "diag_lowrank_gaussian": _fd_error(make_diag_lowrank_gaussian(20, 4, seed=1), rng),
        "logistic_regression": _fd_error(make_logistic_regression(20, seed=1), rng, scale=0.1),
        "xy_mean_field": _fd_error(xy_mean_field(10, beta=1.0), rng),
    }
    xy = xy_mean_field(10, beta=100.0)
    theta = rng.uniform(0, 2 * np.pi, 10)
    naive = -(100.0 / 10) * np.array([np.sum(np.sin(theta[k] - theta)) for k in range(10)])
    xy_err = float(np.max(np.abs(xy.grad_log_density(theta) - naive)))
    passed = all(v <= 1e-5 for v in errors.values()) and xy_err <= 1e-10
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errors.items()) + f", xy double-sum {xy_err:.1e}"
    return CheckResult("target gradients", passed, detail)


def report_lowrank_spectrum() -> CheckResult:
    """Leading spectrum of the diag plus rank-32 Gaussian: a cluster of 32 large eigenvalues."""
    target = make_diag_lowrank_gaussian(200, 32, seed=0)
    values = target.gaussian.eigenvalues
    logger.info(f"diag+low-rank spectrum (d=200): top {np.array2string(values[:34], precision=2, max_line_width=200)}")
    gap = float(values[31] / values[32])
    return CheckResult("diag+low-rank spectrum cluster", gap > 10.0, f"lambda_32 / lambda_33 = {gap:.1f}")


CHECKS: List[Callable[[], CheckResult]] = [
    check_column_property,
    check_ideal_spectrum,
    check_condition_sandwich,
    check_dense_recovery,
    check_ess_oracle,
    check_vi_stationarity,
    check_gradients,
    report_lowrank_spectrum,
]


def run_checks() -> List[CheckResult]:
    results = []
    for check in CHECKS:
        try:
            result = check()
        except Exception as e:
            logger.error(f"Check {check.__name__} raised: {e}")
            result = CheckResult(check.__name__, False, f"raised {type(e).__name__}: {e}")
        log = logger.info if result.passed else logger.error
        log(f"[{'PASS' if result.passed else 'FAIL'}] {result.name}: {result.detail}")
        results.append(result)
    return results
