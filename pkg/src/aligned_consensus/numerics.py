"""Dense linear-algebra kernel: SVD, pseudo-inverse, projectors, null spaces,
Kronecker products, tolerance-based rank, and subspace comparison.

All functions are pure; matrices are plain ``numpy.ndarray``s of float64.
Constructors reject non-finite entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NumericalError(Exception):
    """Raised when an underlying factorization fails or a size limit is hit."""


# Largest number of entries allowed in a Kronecker product result.
KRON_ENTRY_LIMIT = 16_000_000


def as_matrix(a) -> np.ndarray:
    """Coerce to a 2-d float64 array, rejecting NaN/Inf entries."""
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d array, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite (no NaN/Inf)")
    return m


def default_tol(a: np.ndarray) -> float:
    """Standard relative rank tolerance: max(m, n) * machine epsilon."""
    return max(a.shape) * np.finfo(float).eps


@dataclass(frozen=True)
class Svd:
    """SVD factors with a deterministic sign convention.

    ``u @ diag(s) @ vt`` reconstructs the input; singular values are
    non-negative and sorted descending; the first nonzero entry of each
    left singular vector is non-negative.
    """

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    def reconstruct(self) -> np.ndarray:
        m, n = self.u.shape[0], self.vt.shape[1]
        smat = np.zeros((m, n))
        k = len(self.s)
        smat[:k, :k] = np.diag(self.s)
        return self.u @ smat @ self.vt


def _fix_signs(u: np.ndarray, vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip column signs so the first nonzero entry of each u column is >= 0."""
    u = u.copy()
    vt = vt.copy()
    for k in range(u.shape[1]):
        col = u[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            u[:, k] = -col
            if k < vt.shape[0]:
                vt[k, :] = -vt[k, :]
    return u, vt


def svd(a) -> Svd:
    """Full SVD with deterministic signs; raises NumericalError on failure."""
    m = as_matrix(a)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    u, vt = _fix_signs(u, vt)
    return Svd(u=u, s=s, vt=vt)


def orthonormal_sign_fix(basis: np.ndarray) -> np.ndarray:
    """Deterministic signs for a column basis (first nonzero entry >= 0)."""
    b = basis.copy()
    for k in range(b.shape[1]):
        nz = np.flatnonzero(np.abs(b[:, k]) > 1e-12)
        if nz.size and b[nz[0], k] < 0:
            b[:, k] = -b[:, k]
    return b


@dataclass(frozen=True)
class Subspace:
    """A subspace of R^n given by an orthonormal column basis (n x d)."""

    basis: np.ndarray
    ambient_dim: int
    dim: int
    tol: float

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float).ravel()
        resid = x - self.projector() @ x
        return float(np.linalg.norm(resid)) <= tol * (1.0 + np.linalg.norm(x))


def rank_with_tol(a, tol: float | None = None) -> int:
    """Number of singular values above tol * sigma_max."""
    m = as_matrix(a)
    if tol is None:
        tol = default_tol(m)
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = svd(m).s
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def pseudo_inverse(a, tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD, with 0^+ = 0 on small singular values."""
    m = as_matrix(a)
    if tol is None:
        tol = default_tol(m)
    if tol <= 0:
        raise ValueError("tol must be positive")
    f = svd(m)
    s_inv = np.zeros_like(f.s)
    if f.s.size and f.s[0] > 0:
        keep = f.s > tol * f.s[0]
        s_inv[keep] = 1.0 / f.s[keep]
    n, mm = m.shape[1], m.shape[0]
    smat = np.zeros((n, mm))
    k = len(f.s)
    smat[:k, :k] = np.diag(s_inv)
    return f.vt.T @ smat @ f.u.T


def projection_matrix(a, tol: float | None = None) -> np.ndarray:
    """Orthogonal projector onto the column span of ``a`` (A A^+)."""
    m = as_matrix(a)
    if tol is None:
        tol = default_tol(m)
    f = svd(m)
    r = 0
    if f.s.size and f.s[0] > 0:
        r = int(np.count_nonzero(f.s > tol * f.s[0]))
    ur = f.u[:, :r]
    return ur @ ur.T


def range_space(a, tol: float | None = None) -> Subspace:
    """Orthonormal basis of the column span of ``a``."""
    m = as_matrix(a)
    if tol is None:
        tol = default_tol(m)
    f = svd(m)
    r = 0
    if f.s.size and f.s[0] > 0:
        r = int(np.count_nonzero(f.s > tol * f.s[0]))
    return Subspace(basis=f.u[:, :r].copy(), ambient_dim=m.shape[0], dim=r, tol=tol)


def null_space(a, tol: float | None = None) -> Subspace:
    """Orthonormal basis of {x : a x = 0}, dimension cols(a) - rank(a)."""
    m = as_matrix(a)
    if tol is None:
        tol = default_tol(m)
    f = svd(m)
    r = 0
    if f.s.size and f.s[0] > 0:
        r = int(np.count_nonzero(f.s > tol * f.s[0]))
    basis = orthonormal_sign_fix(f.vt[r:, :].T)
    return Subspace(basis=basis, ambient_dim=m.shape[1], dim=m.shape[1] - r, tol=tol)


def orthonormal_complement(basis: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(basis) in R^n."""
    if basis.size == 0:
        f = np.eye(n)
        return f
    return null_space(as_matrix(basis).T).basis


def kron(w, a) -> np.ndarray:
    """Kronecker product with an explicit size guard."""
    wm = as_matrix(w)
    am = as_matrix(a)
    entries = wm.shape[0] * am.shape[0] * wm.shape[1] * am.shape[1]
    if entries > KRON_ENTRY_LIMIT:
        raise NumericalError(
            f"Kronecker result would have {entries} entries "
            f"(limit {KRON_ENTRY_LIMIT})"
        )
    return np.kron(wm, am)


def subspace_equal(s1: Subspace, s2: Subspace, tol: float = 1e-9) -> bool:
    """True iff the two subspaces have the same dimension and projector."""
    if s1.ambient_dim != s2.ambient_dim:
        raise ValueError(
            f"ambient dimension mismatch: {s1.ambient_dim} vs {s2.ambient_dim}"
        )
    if s1.dim != s2.dim:
        return False
    return float(np.linalg.norm(s1.projector() - s2.projector())) <= tol
