"""
Householder-reflection chains, Gram-Schmidt projection and small dense spectral
utilities.

The orthogonal factor Q of the eigen preconditioner is never stored as a d x d
matrix. It is kept as the ordered list of m unit reflector vectors, so that

- building it from an orthonormal basis V costs O(m^2 d),
- applying Q or Q^T to a vector costs O(m d).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy import linalg as sla

from .errors import (
    DegenerateReflectorError,
    DimensionMismatchError,
    NotOrthonormalError,
    NotSymmetricError,
    RankDeficiencyError,
)

DEGENERACY_RTOL = 1e-12
ORTHONORMAL_ATOL = 1e-8
RANK_TOL = 1e-12
SYMMETRY_ATOL = 1e-10


def _check_dims(*arrays: np.ndarray) -> int:
    dims = {a.shape[0] for a in arrays}
    if len(dims) != 1:
        raise DimensionMismatchError(f"Mismatched leading dimensions: {sorted(dims)}")
    return dims.pop()


def _reflect(u: np.ndarray, x: np.ndarray) -> np.ndarray:
    # x may be a vector or a (d, n) block; u has unit norm.
    return x - 2.0 * np.multiply.outer(u, u @ x)


def householder_apply(v: np.ndarray, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    Apply the reflection H(v <-> w) that swaps v and w to x.

    Args:
        v: First vector.
        w: Second vector.
        x: Vector to reflect.

    Returns:
        x - 2 ((v-w)^T x / ||v-w||^2) (v-w)

    Raises:
        DegenerateReflectorError: when ||v - w|| is below 1e-12 max(||v||, ||w||, 1).
    """
    v, w, x = (np.asarray(a, dtype=float) for a in (v, w, x))
    _check_dims(v, w, x)
    diff = v - w
    gap = np.linalg.norm(diff)
    eps = DEGENERACY_RTOL * max(np.linalg.norm(v), np.linalg.norm(w), 1.0)
    if gap <= eps:
        raise DegenerateReflectorError(f"Reflector is undefined: ||v - w|| = {gap:.3e} <= {eps:.3e}")
    return x - 2.0 * (diff @ x) / (gap * gap) * diff


@dataclass(frozen=True)
class HouseholderChain:
    """Ordered product Q = H_m ... H_1 of Householder reflections.

    Each entry of ``reflectors`` is a unit vector u_k (H_k = I - 2 u_k u_k^T) or
    ``None``, the marker of an identity factor.
    """
    reflectors: Tuple[Optional[np.ndarray], ...]
    dim: int

    @property
    def count(self) -> int:
        return len(self.reflectors)

    @property
    def is_identity(self) -> bool:
        return all(u is None for u in self.reflectors)

    @classmethod
    def identity(cls, dim: int, count: int = 0) -> "HouseholderChain":
        return cls(reflectors=(None,) * count, dim=dim)

    def to_dense(self) -> np.ndarray:
        """Materialise Q as a d x d array (O(m d^2); tests and diagnostics only)."""
        return chain_apply(self, np.eye(self.dim), transpose=False)


def chain_apply(chain: HouseholderChain, x: np.ndarray, transpose: bool = False) -> np.ndarray:
    """
    Apply Q (or Q^T) to a vector or to the columns of a (d, n) block.

    Q x applies u_1 first and u_m last; Q^T x runs the chain backwards.
    Identity markers are skipped. O(m d) per vector.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] != chain.dim:
        raise DimensionMismatchError(f"Vector of length {x.shape[0]} for a chain of dimension {chain.dim}")
    order = reversed(chain.reflectors) if transpose else chain.reflectors
    y = x.copy()
    for u in order:
        if u is not None:
            y = _reflect(u, y)
    return y


def check_orthonormal(basis: np.ndarray, atol: float = ORTHONORMAL_ATOL) -> None:
    """Raise NotOrthonormalError unless basis^T basis = I within atol."""
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2:
        raise DimensionMismatchError(f"Expected a 2-D basis, got shape {basis.shape}")
    gram = basis.T @ basis
    err = np.max(np.abs(gram - np.eye(basis.shape[1]))) if basis.size else 0.0
    if err > atol:
        raise NotOrthonormalError(f"Basis is not column-orthonormal (max |V^T V - I| = {err:.3e})")


def build_orthogonal_factor(basis: np.ndarray) -> HouseholderChain:
    """
    Build Q_m from column-orthonormal V so that Q e_i = v_i for i <= m.

    Q_1 = H(e_1 <-> v_1), Q_k = H(Q_{k-1} e_k <-> v_k) Q_{k-1}. Each reflector is
    obtained by pushing e_k through the partial chain, so construction is O(m^2 d).
    A factor whose two vectors already coincide is stored as an identity marker.

    Args:
        basis: d x m array with orthonormal columns.

    Returns:
        HouseholderChain with m entries.
    """
    basis = np.asarray(basis, dtype=float)
    check_orthonormal(basis)
    d, m = basis.shape
    reflectors: list[Optional[np.ndarray]] = []
    for k in range(m):
        e_k = np.zeros(d)
        e_k[k] = 1.0
        partial = HouseholderChain(reflectors=tuple(reflectors), dim=d)
        q_k = chain_apply(partial, e_k)
        diff = q_k - basis[:, k]
        gap = np.linalg.norm(diff)
        if gap <= DEGENERACY_RTOL * max(np.linalg.norm(q_k), np.linalg.norm(basis[:, k]), 1.0):
            reflectors.append(None)
        else:
            reflectors.append(diff / gap)
    return HouseholderChain(reflectors=tuple(reflectors), dim=d)


def gram_schmidt_project(raw: np.ndarray) -> np.ndarray:
    """
    Project a d x m array onto O(d, m) with modified Gram-Schmidt.

    Every column is swept twice against the already accepted columns (one
    re-orthogonalisation pass), which keeps the output orthonormal when Oja
    updates push columns close to parallel.

    Raises:
        RankDeficiencyError: when a residual column norm drops below
            1e-12 times the column's original norm (or 1e-12 for small columns).
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2:
        raise DimensionMismatchError(f"Expected a 2-D array, got shape {raw.shape}")
    d, m = raw.shape
    out = np.empty((d, m))
    for j in range(m):
        w = raw[:, j].copy()
        scale = max(np.linalg.norm(w), 1.0)
        for _ in range(2):
            for i in range(j):
                w -= (out[:, i] @ w) * out[:, i]
        norm = np.linalg.norm(w)
        if norm < RANK_TOL * scale:
            raise RankDeficiencyError(f"Column {j} is numerically dependent (residual norm {norm:.3e})")
        out[:, j] = w / norm
    return out


def sym_eig(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Full eigendecomposition of a symmetric matrix, eigenvalues in descending order.

    Returns:
        (eigenvalues, eigenvectors) with eigenvectors as columns.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"Expected a square matrix, got shape {a.shape}")
    asym = np.max(np.abs(a - a.T)) if a.size else 0.0
    if asym > SYMMETRY_ATOL * max(1.0, np.max(np.abs(a))):
        raise NotSymmetricError(f"Matrix is not symmetric (max |A - A^T| = {asym:.3e})")
    values, vectors = sla.eigh((a + a.T) / 2.0)
    return values[::-1].copy(), vectors[:, ::-1].copy()


def complete_orthonormal_basis(leading: np.ndarray, seed: int | np.random.SeedSequence, max_attempts: int = 3) -> np.ndarray:
    """
    Complete a column-orthonormal d x K array to a d x d orthogonal matrix.

    The first K columns are returned untouched; the rest come from seeded
    standard-normal columns orthogonalised against everything before them
    (classical Gram-Schmidt applied twice).
    """
    leading = np.asarray(leading, dtype=float)
    check_orthonormal(leading)
    d, k = leading.shape
    rng = np.random.default_rng(seed)
    for attempt in range(1, max_attempts + 1):
        q = np.empty((d, d))
        q[:, :k] = leading
        fill = rng.standard_normal((d, d - k))
        try:
            for j in range(k, d):
                w = fill[:, j - k]
                scale = max(np.linalg.norm(w), 1.0)
                for _ in range(2):
                    w = w - q[:, :j] @ (q[:, :j].T @ w)
                norm = np.linalg.norm(w)
                if norm < RANK_TOL * scale:
                    raise RankDeficiencyError(f"Fill column {j} is numerically dependent")
                q[:, j] = w / norm
            return q
        except RankDeficiencyError as e:
            logger.warning(f"Basis completion attempt {attempt}/{max_attempts} failed: {e}")
    raise RankDeficiencyError(f"Could not complete the basis after {max_attempts} attempts")


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n x n orthogonal matrix (QR of a Gaussian matrix with R-diagonal sign fix)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs
