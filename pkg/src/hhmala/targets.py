"""
Target distributions for the experiments: Gaussians with known eigenstructure,
a synthetic Bayesian logistic regression posterior and the mean-field XY model.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from loguru import logger
from scipy import linalg as sla
from scipy.special import expit

from .errors import ConvergenceError, DimensionMismatchError, MissingMetadataError
from .linalg import complete_orthonormal_basis, haar_orthogonal, sym_eig

TARGET_NAMES = ("tailored_gaussian", "diag_lowrank_gaussian", "logistic_regression", "xy_mean_field")


def _seed_sequence(seed: int | np.random.SeedSequence) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


@dataclass(frozen=True)
class GaussianMetadata:
    """Exact mean and eigendecomposition of a Gaussian target's covariance (eigenvalues descending)."""
    mean: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @cached_property
    def covariance(self) -> np.ndarray:
        cov = (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T
        return (cov + cov.T) / 2.0

    @cached_property
    def precision(self) -> np.ndarray:
        prec = (self.eigenvectors / self.eigenvalues) @ self.eigenvectors.T
        return (prec + prec.T) / 2.0

    @property
    def condition_number(self) -> float:
        return float(self.eigenvalues[0] / self.eigenvalues[-1])

    @property
    def leading_eigenvector(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


@dataclass(frozen=True)
class LogisticMetadata:
    mode: np.ndarray
    hessian: np.ndarray
    condition_number: float


class TargetModel(ABC):
    """A density known up to a constant, with its gradient and optional ground truth."""

    name: str = "target"

    def __init__(self, dim: int):
        self.dim = dim

    @abstractmethod
    def log_density(self, x: np.ndarray) -> float:
        """log pi(x) up to an additive constant."""

    @abstractmethod
    def grad_log_density(self, x: np.ndarray) -> np.ndarray:
        """Gradient of log pi at x."""

    @property
    def gaussian(self) -> Optional[GaussianMetadata]:
        return None

    @property
    def mode(self) -> Optional[np.ndarray]:
        return None

    @property
    def leading_direction(self) -> Optional[np.ndarray]:
        """Leading covariance eigenvector when the target knows it."""
        meta = self.gaussian
        return None if meta is None else meta.leading_eigenvector

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(f"{self.name} expects a vector of length {self.dim}, got shape {x.shape}")
        return x


class GaussianTarget(TargetModel):
    """N(mean, Q diag(eigenvalues) Q^T)."""

    name = "gaussian"

    def __init__(self, metadata: GaussianMetadata, name: Optional[str] = None):
        super().__init__(metadata.mean.shape[0])
        if np.any(metadata.eigenvalues <= 0):
            raise ValueError("Gaussian target covariance must be positive definite")
        self._meta = metadata
        if name:
            self.name = name

    @property
    def gaussian(self) -> GaussianMetadata:
        return self._meta

    @property
    def mode(self) -> np.ndarray:
        return self._meta.mean

    def _whitened(self, x: np.ndarray) -> np.ndarray:
        return self._meta.eigenvectors.T @ (x - self._meta.mean)

    def log_density(self, x: np.ndarray) -> float:
        z = self._whitened(self._check(x))
        return float(-0.5 * np.sum(z * z / self._meta.eigenvalues))

    def grad_log_density(self, x: np.ndarray) -> np.ndarray:
        z = self._whitened(self._check(x))
        return -self._meta.eigenvectors @ (z / self._meta.eigenvalues)


def gaussian_from_covariance(mean: np.ndarray, covariance: np.ndarray, name: Optional[str] = None) -> GaussianTarget:
    values, vectors = sym_eig(covariance)
    return GaussianTarget(GaussianMetadata(mean=np.asarray(mean, dtype=float), eigenvalues=values, eigenvectors=vectors), name=name)


def make_tailored_gaussian(d: int, K: int, seed: int | np.random.SeedSequence) -> GaussianTarget:
    """
    Gaussian with mean (5, ..., 5), K large eigenvalues and d - K eigenvalues equal to 0.1.

    The K large eigenvalues are drawn from N(100, 0.01) and sorted descending; the
    leading eigenvector is the normalised all-ones vector and the others complete it
    to an orthonormal basis.
    """
    if not 1 <= K < d:
        raise ValueError(f"Tailored Gaussian needs 1 <= K < d, got K={K}, d={d}")
    eig_seed, basis_seed = _seed_sequence(seed).spawn(2)
    rng = np.random.default_rng(eig_seed)
    eigenvalues = np.full(d, 0.1)
    eigenvalues[:K] = np.sort(rng.normal(100.0, 0.1, size=K))[::-1]
    leading = np.full((d, 1), 1.0 / np.sqrt(d))
    eigenvectors = complete_orthonormal_basis(leading, basis_seed)
    logger.debug(f"Tailored Gaussian d={d} K={K}: condition number {eigenvalues[0] / eigenvalues[-1]:.1f}")
    meta = GaussianMetadata(mean=np.full(d, 5.0), eigenvalues=eigenvalues, eigenvectors=eigenvectors)
    return GaussianTarget(meta, name="tailored_gaussian")


def make_diag_lowrank_gaussian(d: int, rank: int, seed: int | np.random.SeedSequence) -> GaussianTarget:
    """N(mu, D + V V^T) with mu ~ N(0, I), D_ii ~ U[0, 1] and V_ij ~ N(0, 1)."""
    if not 1 <= rank < d:
        raise ValueError(f"Diagonal plus low-rank Gaussian needs 1 <= rank < d, got rank={rank}, d={d}")
    rng = np.random.default_rng(seed)
    mean = rng.standard_normal(d)
    diag = rng.uniform(0.0, 1.0, size=d)
    lowrank = rng.standard_normal((d, rank))
    covariance = np.diag(diag) + lowrank @ lowrank.T
    return gaussian_from_covariance(mean, covariance, name="diag_lowrank_gaussian")


@dataclass(frozen=True)
class LogisticRegressionData:
    X: np.ndarray
    Y: np.ndarray
    lam: float = 0.01

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"Prior strength must be positive, got {self.lam}")
        if not np.all((self.Y == 0) | (self.Y == 1)):
            raise ValueError("Responses must be binary")
        if self.X.shape[0] != self.Y.shape[0]:
            raise DimensionMismatchError("Design matrix and responses have different lengths")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @cached_property
    def gram(self) -> np.ndarray:
        return self.X.T @ self.X


class LogisticRegressionTarget(TargetModel):
    """Posterior exp(-U(beta)) of a logistic regression under a g-prior.

    U(beta) = sum_i ((1 - Y_i) X_i^T beta + log(1 + exp(-X_i^T beta))) + lam / (2n) beta^T X^T X beta
    """

    name = "logistic_regression"

    def __init__(self, data: LogisticRegressionData, max_newton_iter: int = 200, grad_tol: float = 1e-8):
        super().__init__(data.X.shape[1])
        self.data = data
        self._meta = self._find_mode(max_newton_iter, grad_tol)

    def potential(self, beta: np.ndarray) -> float:
        X, Y, lam, n = self.data.X, self.data.Y, self.data.lam, self.data.n
        z = X @ beta
        return float(np.sum((1.0 - Y) * z + np.logaddexp(0.0, -z)) + lam / (2.0 * n) * beta @ self.data.gram @ beta)

    def grad_potential(self, beta: np.ndarray) -> np.ndarray:
        X, Y, lam, n = self.data.X, self.data.Y, self.data.lam, self.data.n
        return X.T @ (expit(X @ beta) - Y) + (lam / n) * (self.data.gram @ beta)

    def hessian_potential(self, beta: np.ndarray) -> np.ndarray:
        X, lam, n = self.data.X, self.data.lam, self.data.n
        s = expit(X @ beta)
        weights = s * (1.0 - s) + lam / n
        H = (X.T * weights) @ X
        return (H + H.T) / 2.0

    def log_density(self, x: np.ndarray) -> float:
        return -self.potential(self._check(x))

    def grad_log_density(self, x: np.ndarray) -> np.ndarray:
        return -self.grad_potential(self._check(x))

    @property
    def metadata(self) -> LogisticMetadata:
        return self._meta

    @property
    def mode(self) -> np.ndarray:
        return self._meta.mode

    def _find_mode(self, max_iter: int, grad_tol: float) -> LogisticMetadata:
        """Damped Newton with Armijo backtracking on U."""
        beta = np.zeros(self.dim)
        u = self.potential(beta)
        it = 0
        for it in range(max_iter):
            g = self.grad_potential(beta)
            if np.linalg.norm(g) <= grad_tol:
                break
            H = self.hessian_potential(beta)
            step = sla.cho_solve(sla.cho_factor(H), g)
            slope = g @ step
            t = 1.0
            while t > 1e-10:
                candidate = beta - t * step
                u_new = self.potential(candidate)
                if u_new <= u - 1e-4 * t * slope + 1e-12 * abs(u):
                    break
                t *= 0.5
            beta, u = candidate, u_new
        else:
            g = self.grad_potential(beta)
            if np.linalg.norm(g) > grad_tol:
                raise ConvergenceError(f"Newton mode search stopped after {max_iter} iterations (gradient norm {np.linalg.norm(g):.3e})")
        logger.debug(f"Logistic mode found after {it} Newton iterations")
        gram_values = sla.eigvalsh(self.data.gram)
        n, lam = self.data.n, self.data.lam
        kappa = float(gram_values[-1] / gram_values[0] * (n / 4.0 + lam) / lam)
        return LogisticMetadata(mode=beta, hessian=self.hessian_potential(beta), condition_number=kappa)


def make_logistic_regression(d: int, seed: int | np.random.SeedSequence, lam: float = 0.01) -> LogisticRegressionTarget:
    """
    Synthetic logistic regression posterior with n = d observations.

    X = U D V^T with Haar U, V; three singular values ~ N(1, 1e-6) and the rest
    sqrt(1000). True coefficients are drawn from N(0, I/d) and Y_i ~ Bernoulli(s(X_i^T beta*)).
    """
    if d < 4:
        raise ValueError(f"Logistic regression target needs d >= 4, got {d}")
    rng = np.random.default_rng(seed)
    n = d
    U = haar_orthogonal(n, rng)
    V = haar_orthogonal(d, rng)
    singular = np.full(d, np.sqrt(1000.0))
    singular[:3] = rng.normal(1.0, 1e-3, size=3)
    X = (U * singular) @ V.T
    beta_star = rng.normal(0.0, 1.0 / np.sqrt(d), size=d)
    Y = (rng.uniform(size=n) < expit(X @ beta_star)).astype(float)
    return LogisticRegressionTarget(LogisticRegressionData(X=X, Y=Y, lam=lam))


class XYMeanField(TargetModel):
    """Mean-field XY model with unit couplings at inverse temperature beta.

    log pi(theta) = beta / (2d) (C^2 + S^2) with C = sum cos theta_i and S = sum sin theta_i.
    States live on R^d; the density is periodic and never wrapped.
    """

    name = "xy_mean_field"

    def __init__(self, d: int, beta: float = 100.0):
        if d < 2:
            raise ValueError(f"XY model needs d >= 2, got {d}")
        if beta < 0:
            raise ValueError(f"Inverse temperature must be non-negative, got {beta}")
        super().__init__(d)
        self.beta = float(beta)

    def potential(self, theta: np.ndarray) -> float:
        theta = self._check(theta)
        C, S = np.sum(np.cos(theta)), np.sum(np.sin(theta))
        return float(-(C * C + S * S) / (2.0 * self.dim))

    def log_density(self, x: np.ndarray) -> float:
        return -self.beta * self.potential(x)

    def grad_log_density(self, x: np.ndarray) -> np.ndarray:
        theta = self._check(x)
        cos, sin = np.cos(theta), np.sin(theta)
        C, S = np.sum(cos), np.sum(sin)
        return -(self.beta / self.dim) * (C * sin - S * cos)

    @property
    def mode(self) -> np.ndarray:
        return np.zeros(self.dim)


def xy_mean_field(d: int, beta: float = 100.0) -> XYMeanField:
    return XYMeanField(d, beta)


def sample_exact(target: TargetModel, rng: np.random.Generator) -> np.ndarray:
    """Exact draw mu + Q D^{1/2} xi from a Gaussian target."""
    meta = target.gaussian
    if meta is None:
        raise MissingMetadataError(f"{target.name} has no Gaussian metadata to sample from")
    xi = rng.standard_normal(target.dim)
    return meta.mean + meta.eigenvectors @ (np.sqrt(meta.eigenvalues) * xi)


def make_target(name: str, d: int, seed: int | np.random.SeedSequence, K: int = 3, rank: int = 32, beta: float = 100.0,
                lam: float = 0.01) -> TargetModel:
    """Build one of the experiment targets by name."""
    if name == "tailored_gaussian":
        return make_tailored_gaussian(d, K, seed)
    if name == "diag_lowrank_gaussian":
        return make_diag_lowrank_gaussian(d, rank, seed)
    if name == "logistic_regression":
        return make_logistic_regression(d, seed, lam=lam)
    if name == "xy_mean_field":
        return xy_mean_field(d, beta)
    raise ValueError(f"Unknown target: {name}. Supported: {', '.join(TARGET_NAMES)}")
