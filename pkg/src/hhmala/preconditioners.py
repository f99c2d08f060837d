"""
Preconditioner parameterisations used by the MALA kernel.

Every variant exposes L x, L^T x, L^{-1} x, M x = L L^T x and draws from
N(0, L L^T). The global scale sigma travels with the preconditioner but is only
applied by the kernel; it is never folded into L.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy import linalg as sla

from .errors import DimensionMismatchError, SingularPreconditionerError
from .linalg import HouseholderChain, build_orthogonal_factor, chain_apply, sym_eig

SINGULAR_TOL = 1e-12


class Preconditioner(ABC):
    """Abstract base class for preconditioners L (with M = L L^T)."""

    global_scale: float

    @property
    @abstractmethod
    def dim(self) -> int:
        """Dimension d of the state space."""

    @abstractmethod
    def _L(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _Lt(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _L_inv(self, x: np.ndarray) -> np.ndarray: ...

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.dim:
            raise DimensionMismatchError(f"Vector of length {x.shape[0]} for a preconditioner of dimension {self.dim}")
        return x

    def apply_L(self, x: np.ndarray) -> np.ndarray:
        return self._L(self._check(x))

    def apply_Lt(self, x: np.ndarray) -> np.ndarray:
        return self._Lt(self._check(x))

    def apply_L_inv(self, x: np.ndarray) -> np.ndarray:
        return self._L_inv(self._check(x))

    def apply_M(self, x: np.ndarray) -> np.ndarray:
        x = self._check(x)
        return self._L(self._Lt(x))

    def sample_gaussian(self, rng: np.random.Generator) -> np.ndarray:
        """Draw L xi with xi ~ N(0, I_d)."""
        return self._L(rng.standard_normal(self.dim))

    def materialise_L(self) -> np.ndarray:
        return self.apply_L(np.eye(self.dim))

    def materialise_M(self) -> np.ndarray:
        L = self.materialise_L()
        return L @ L.T

    def with_scale(self, global_scale: float) -> "Preconditioner":
        return replace(self, global_scale=float(global_scale))


@dataclass(frozen=True)
class Identity(Preconditioner):
    """No preconditioning."""
    d: int
    global_scale: float = 1.0

    @property
    def dim(self) -> int:
        return self.d

    def _L(self, x):
        return x.copy()

    _Lt = _L
    _L_inv = _L


@dataclass(frozen=True)
class Diagonal(Preconditioner):
    """L = diag(scales)."""
    scales: np.ndarray
    global_scale: float = 1.0

    def __post_init__(self):
        if np.any(self.scales <= 0):
            raise SingularPreconditionerError("Diagonal scales must be strictly positive")

    @property
    def dim(self) -> int:
        return self.scales.shape[0]

    def _scale(self, x):
        return x * self.scales if x.ndim == 1 else x * self.scales[:, None]

    def _L(self, x):
        return self._scale(x)

    _Lt = _L

    def _L_inv(self, x):
        if np.min(self.scales) < SINGULAR_TOL:
            raise SingularPreconditionerError(f"Diagonal scale {np.min(self.scales):.3e} is below {SINGULAR_TOL}")
        return x / self.scales if x.ndim == 1 else x / self.scales[:, None]


@dataclass(frozen=True)
class DenseFactor(Preconditioner):
    """General dense L.

    A symmetric L (the square roots produced by the dense scheme) is inverted
    through its eigendecomposition with eigenvalues floored at 1e-12; any other
    L goes through an LU factorisation.
    """
    L: np.ndarray
    global_scale: float = 1.0
    _eig: Optional[Tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False, compare=False)
    _lu: Optional[tuple] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        L = self.L
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise DimensionMismatchError(f"Dense factor must be square, got shape {L.shape}")
        if self._eig is None and np.allclose(L, L.T, rtol=0.0, atol=1e-12 * max(1.0, np.max(np.abs(L)))):
            object.__setattr__(self, "_eig", sym_eig(L))
        if self._eig is not None:
            values, _ = self._eig
            if np.max(np.abs(values)) < SINGULAR_TOL:
                raise SingularPreconditionerError("Dense factor is numerically zero")
        else:
            lu, piv = sla.lu_factor(L)
            if np.min(np.abs(np.diag(lu))) < SINGULAR_TOL:
                raise SingularPreconditionerError("Dense factor is singular")
            object.__setattr__(self, "_lu", (lu, piv))

    @classmethod
    def from_eig(cls, values: np.ndarray, vectors: np.ndarray, global_scale: float = 1.0) -> "DenseFactor":
        """Symmetric factor L = Q diag(values) Q^T with its decomposition cached."""
        L = (vectors * values) @ vectors.T
        return cls(L=(L + L.T) / 2.0, global_scale=global_scale, _eig=(values, vectors))

    @property
    def dim(self) -> int:
        return self.L.shape[0]

    @property
    def eigendecomposition(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """(values, vectors) of a symmetric factor, None for a general one."""
        return self._eig

    def _L(self, x):
        return self.L @ x

    def _Lt(self, x):
        return self.L.T @ x

    def _L_inv(self, x):
        if self._eig is not None:
            values, vectors = self._eig
            safe = np.where(np.abs(values) < SINGULAR_TOL, SINGULAR_TOL, values)
            coeffs = vectors.T @ x
            return vectors @ (coeffs / safe if x.ndim == 1 else coeffs / safe[:, None])
        return sla.lu_solve(self._lu, x)


@dataclass(frozen=True)
class EigenChain(Preconditioner):
    """L = Q D with Q a Householder chain and D = diag(scales)."""
    chain: HouseholderChain
    scales: np.ndarray
    global_scale: float = 1.0

    def __post_init__(self):
        if self.scales.shape[0] != self.chain.dim:
            raise DimensionMismatchError("Scales and chain dimensions differ")
        if np.any(self.scales <= 0):
            raise SingularPreconditionerError("Eigen scales must be strictly positive")

    @property
    def dim(self) -> int:
        return self.chain.dim

    def _scale(self, x, power=1.0):
        s = self.scales ** power
        return x * s if x.ndim == 1 else x * s[:, None]

    def _L(self, x):
        return chain_apply(self.chain, self._scale(x))

    def _Lt(self, x):
        return self._scale(chain_apply(self.chain, x, transpose=True))

    def _L_inv(self, x):
        if np.min(self.scales) < SINGULAR_TOL:
            raise SingularPreconditionerError(f"Eigen scale {np.min(self.scales):.3e} is below {SINGULAR_TOL}")
        return self._scale(chain_apply(self.chain, x, transpose=True), power=-1.0)


@dataclass(frozen=True)
class DiagLowRank(Preconditioner):
    """Symmetric L = diag + V V^T, learned before the chain and frozen afterwards."""
    diag: np.ndarray
    lowrank: np.ndarray
    global_scale: float = 1.0
    _capacitance: Optional[tuple] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.lowrank.shape[0] != self.diag.shape[0]:
            raise DimensionMismatchError("Diagonal and low-rank parts have different dimensions")
        if np.any(self.diag <= 0):
            raise SingularPreconditionerError("Diagonal part must be strictly positive")
        object.__setattr__(self, "_capacitance", smw_factor(self.diag, self.lowrank))

    @property
    def dim(self) -> int:
        return self.diag.shape[0]

    def _L(self, x):
        d = self.diag if x.ndim == 1 else self.diag[:, None]
        return d * x + self.lowrank @ (self.lowrank.T @ x)

    _Lt = _L

    def _L_inv(self, x):
        return smw_solve(self.diag, self.lowrank, x, self._capacitance)


def smw_factor(diag: np.ndarray, lowrank: np.ndarray):
    """Cholesky factor of the m x m capacitance matrix I + V^T D^{-1} V."""
    m = lowrank.shape[1]
    cap = np.eye(m) + lowrank.T @ (lowrank / diag[:, None])
    try:
        return sla.cho_factor(cap, lower=True)
    except np.linalg.LinAlgError as e:
        logger.error(f"Capacitance matrix is not positive definite: {e}")
        raise SingularPreconditionerError(f"Woodbury capacitance matrix is singular: {e}") from e


def smw_solve(diag: np.ndarray, lowrank: np.ndarray, x: np.ndarray, factor=None) -> np.ndarray:
    """
    Solve (D + V V^T) y = x with the Sherman-Morrison-Woodbury identity.

    (D + V V^T)^{-1} = D^{-1} - D^{-1} V (I + V^T D^{-1} V)^{-1} V^T D^{-1}, so the
    cost is O(m d) plus an m x m Cholesky solve.
    """
    factor = factor if factor is not None else smw_factor(diag, lowrank)
    d = diag if x.ndim == 1 else diag[:, None]
    y = x / d
    return y - (lowrank @ sla.cho_solve(factor, lowrank.T @ y)) / d


def apply_L(p: Preconditioner, x: np.ndarray) -> np.ndarray:
    return p.apply_L(x)


def apply_L_inv(p: Preconditioner, x: np.ndarray) -> np.ndarray:
    return p.apply_L_inv(x)


def apply_M(p: Preconditioner, x: np.ndarray) -> np.ndarray:
    return p.apply_M(x)


def sample_gaussian(p: Preconditioner, rng: np.random.Generator) -> np.ndarray:
    return p.sample_gaussian(rng)


def ideal_eigen_preconditioner(eigenvalues: np.ndarray, eigenvectors: np.ndarray, m: int, global_scale: float = 1.0) -> EigenChain:
    """
    The ideal preconditioner L = Q D for a target covariance with known eigeninformation.

    Args:
        eigenvalues: Covariance eigenvalues in descending order.
        eigenvectors: Matching eigenvectors as columns.
        m: Number of leading eigenpairs used.

    Returns:
        EigenChain whose first m columns of Q are the leading eigenvectors, with
        scales (sqrt(l_1), ..., sqrt(l_m), 1, ..., 1).
    """
    d = eigenvectors.shape[0]
    scales = np.ones(d)
    scales[:m] = np.sqrt(eigenvalues[:m])
    return EigenChain(chain=build_orthogonal_factor(eigenvectors[:, :m]), scales=scales, global_scale=global_scale)
