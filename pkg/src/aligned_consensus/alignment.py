"""Information-alignment operators.

Builds the signal-subspace projector, the invertible preconditioner that moves
the signal subspace into an interference null space, the rank-deficient
post-conditioner that annihilates receiver-side interference, the per-link
matrix consensus weights, and the conservative interference blanket.

The signal-subspace SVD is arranged with the zero singular values first and
the unit ones last; the preconditioner/post-conditioner block structure relies
on that ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import (
    NumericalError,
    Subspace,
    as_matrix,
    null_space,
    orthonormal_complement,
    orthonormal_sign_fix,
    svd,
)

POSTCOND_RETRY_LIMIT = 16


@dataclass(frozen=True)
class SignalSubspace:
    """Projector I_S = U diag(mask) U^T with the unit mask entries last.

    ``u`` is a full n x n orthogonal matrix whose last ``dim`` columns span
    the signal subspace; ``mask`` is the 0/1 diagonal (zeros first).
    """

    u: np.ndarray
    mask: np.ndarray
    dim: int

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def vt(self) -> np.ndarray:
        return self.u.T

    @property
    def projector(self) -> np.ndarray:
        return (self.u * self.mask) @ self.u.T

    @property
    def mask_matrix(self) -> np.ndarray:
        return np.diag(self.mask)

    def basis(self) -> np.ndarray:
        """Orthonormal columns spanning the signal subspace."""
        return self.u[:, self.n - self.dim:]


def _complete_orthogonal(selected: np.ndarray, n: int) -> np.ndarray:
    """Full orthogonal matrix [complement | selected] for the mask ordering."""
    comp = orthonormal_complement(selected, n)
    comp = orthonormal_sign_fix(comp)
    return np.hstack([comp, selected]) if selected.size else comp


def make_signal_subspace(
    n: int,
    dim: int,
    mode: str = "arbitrary",
    seed: int = 0,
    a: np.ndarray | None = None,
    indices: list[int] | None = None,
) -> SignalSubspace:
    """Construct a signal subspace of dimension ``dim`` in R^n.

    mode 'arbitrary': seeded random orthonormal directions.
    mode 'principal': the ``dim`` largest singular directions of ``a``.
    mode 'selective': the singular directions of ``a`` at ``indices``.
    """
    if not (0 <= dim <= n):
        raise ValueError(f"signal dimension must be in [0, {n}], got {dim}")
    if mode == "arbitrary":
        rng = np.random.default_rng(seed)
        q, r = np.linalg.qr(rng.standard_normal((n, n)))
        q = q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
        selected = q[:, :dim]
    elif mode in ("principal", "selective"):
        if a is None:
            raise ValueError(f"mode {mode!r} requires a matrix")
        f = svd(as_matrix(a))
        if mode == "principal":
            idx = list(range(dim))
        else:
            if indices is None or len(indices) != dim:
                raise ValueError("selective mode needs exactly `dim` indices")
            if len(set(indices)) != len(indices) or any(
                not (0 <= k < n) for k in indices
            ):
                raise ValueError(f"invalid singular-value indices: {indices}")
            idx = list(indices)
        selected = f.u[:, idx]
    else:
        raise ValueError(f"unknown signal-subspace mode: {mode!r}")
    selected = orthonormal_sign_fix(selected)
    u = _complete_orthogonal(selected, n)
    mask = np.concatenate([np.zeros(n - dim), np.ones(dim)])
    return SignalSubspace(u=u, mask=mask, dim=dim)


def _same_span_basis(basis: np.ndarray, take: int, rng: np.random.Generator | None):
    """Pick a ``take``-column basis inside span(basis), optionally randomized."""
    if rng is None:
        return basis[:, :take]
    d = basis.shape[1]
    for _ in range(POSTCOND_RETRY_LIMIT):
        mix = rng.standard_normal((d, take))
        cand = basis @ mix
        if np.linalg.matrix_rank(cand) == take:
            return cand
    raise NumericalError("failed to draw a full-rank same-span basis")


@dataclass(frozen=True)
class Preconditioner:
    """Invertible T with Gamma T I_S = 0 for its paired Gamma and I_S."""

    t: np.ndarray
    t_inv: np.ndarray
    source_nullspace: Subspace
    condition_number: float


def build_preconditioner(
    gamma_nullspace: Subspace,
    s: SignalSubspace,
    completion_seed: int = 0,
    randomize_basis: bool = False,
) -> Preconditioner:
    """T = [completion | null-space columns] U_S^T (invertible by construction).

    The last ``s.dim`` columns of the bracket lie in the interference null
    space, so T I_S maps the signal subspace into it. Requires
    dim(null space) >= s.dim; any excess null-space directions are unused.
    """
    n = s.n
    if gamma_nullspace.ambient_dim != n:
        raise ValueError("null space and signal subspace dimensions disagree")
    if gamma_nullspace.dim < s.dim:
        raise ValueError(
            f"interference null space has dimension {gamma_nullspace.dim}, "
            f"need at least {s.dim}"
        )
    rng = np.random.default_rng(completion_seed) if randomize_basis else None
    v_low = _same_span_basis(gamma_nullspace.basis, s.dim, rng)
    v_bar = orthonormal_complement(v_low, n)
    bracket = np.hstack([v_bar, v_low])
    t = bracket @ s.u.T
    cond = float(np.linalg.cond(t))
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericalError(f"preconditioner is numerically singular (cond={cond:g})")
    t_inv = np.linalg.inv(t)
    return Preconditioner(
        t=t, t_inv=t_inv, source_nullspace=gamma_nullspace, condition_number=cond
    )


@dataclass(frozen=True)
class PostConditioner:
    """Rank-dim(S) matrix R with R Gamma = 0 for its paired Gamma."""

    r: np.ndarray
    u_hat: np.ndarray
    u_hat_inv: np.ndarray
    condition_number: float


def build_postconditioner(
    gamma_t_nullspace: Subspace,
    s: SignalSubspace,
    completion_seed: int = 0,
    randomize_basis: bool = False,
) -> PostConditioner:
    """R = S_S [completion | null(Gamma^T) basis]^T, annihilating Gamma.

    The lower dim(S) x dim(S) block of the null-space basis must be
    invertible; on near-singularity the same-span basis is re-drawn up to a
    retry limit.
    """
    n = s.n
    gamma_bar = n - s.dim
    if gamma_t_nullspace.ambient_dim != n:
        raise ValueError("null space and signal subspace dimensions disagree")
    if gamma_t_nullspace.dim != s.dim:
        raise ValueError(
            f"null space of the transposed gain has dimension "
            f"{gamma_t_nullspace.dim}, expected {s.dim}"
        )
    rng = np.random.default_rng(completion_seed) if randomize_basis else None
    attempts = POSTCOND_RETRY_LIMIT if randomize_basis else 1
    last_cond = np.inf
    for _ in range(attempts):
        u_low = _same_span_basis(gamma_t_nullspace.basis, s.dim, rng)
        u_hat = u_low[gamma_bar:, :]
        last_cond = float(np.linalg.cond(u_hat)) if s.dim else 1.0
        if np.isfinite(last_cond) and last_cond <= 1e12:
            u_bar = orthonormal_complement(u_low, n)
            r = s.mask_matrix @ np.hstack([u_bar, u_low]).T
            u_hat_inv = np.linalg.inv(u_hat) if s.dim else u_hat.T.copy()
            return PostConditioner(
                r=r, u_hat=u_hat, u_hat_inv=u_hat_inv, condition_number=last_cond
            )
    raise NumericalError(
        f"lower block of the null-space basis is numerically singular "
        f"(cond={last_cond:g}); the interference null space is degenerate "
        f"with respect to the signal-subspace coordinate split"
    )


def matrix_weight_outgoing(w_ij: float, t_j: Preconditioner) -> np.ndarray:
    """Matrix consensus weight for the outgoing protocol: w_ij T_j^{-1}."""
    return w_ij * t_j.t_inv


def matrix_weight_incoming(w_ij: float, post: PostConditioner) -> np.ndarray:
    """Matrix weight for the incoming protocol: w_ij blockdiag(0, (U_hat^T)^{-1})."""
    d = post.u_hat.shape[0]
    n = post.r.shape[0]
    w = np.zeros((n, n))
    if d:
        w[n - d:, n - d:] = w_ij * post.u_hat_inv.T
    return w


def build_blanket(
    gains: list[np.ndarray] | tuple[np.ndarray, ...],
    tol: float = 1e-9,
) -> tuple[np.ndarray, Subspace]:
    """Conservative interference blanket covering every gain's column span.

    Returns the orthogonal projector onto the combined column span and the
    orthogonal-complement subspace (the blanket's null space).
    """
    if not gains:
        raise ValueError("at least one gain matrix is required")
    mats = [as_matrix(g) for g in gains]
    n = mats[0].shape[0]
    if any(m.shape != (n, n) for m in mats):
        raise ValueError("all gains must share a common n x n shape")
    stacked = np.hstack(mats)
    f = svd(stacked)
    r = 0
    if f.s.size and f.s[0] > 0:
        r = int(np.count_nonzero(f.s > tol * f.s[0]))
    range_basis = f.u[:, :r]
    blanket = range_basis @ range_basis.T
    nullspace = Subspace(
        basis=orthonormal_sign_fix(f.u[:, r:]),
        ambient_dim=n,
        dim=n - r,
        tol=tol,
    )
    return blanket, nullspace
