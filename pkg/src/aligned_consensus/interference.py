"""Additive interference channel: gain matrices, the 0/1 interference tensor,
and per-link received messages.

The tensor ``a[i, j, m]`` is 1 when agent m interferes with the j -> i link;
it may be 1 only for links (i, j) present in the communication graph. An agent
may interfere with its own outgoing link (m == j is allowed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import as_matrix
from .topology import Graph, WeightMatrix

VARIANTS = ("uniform", "general", "outgoing", "incoming")


def random_low_rank(
    n: int,
    rank: int,
    seed: int = 0,
    symmetric: bool = False,
    unit_norm: bool = False,
) -> np.ndarray:
    """Random n x n matrix of exact numerical rank ``rank``.

    Built as a product of standard-normal n x r and r x n factors; with
    ``symmetric=True`` the matrix is G G^T so its row and column spans agree;
    with ``unit_norm=True`` the result is rescaled to unit spectral norm so a
    scenario's scale factor controls the coupling strength directly.
    """
    if not (1 <= rank <= n):
        raise ValueError(f"rank must be in [1, {n}], got {rank}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, rank))
    if symmetric:
        out = g @ g.T
    else:
        h = rng.standard_normal((rank, n))
        out = g @ h
    if unit_norm:
        out = out / np.linalg.norm(out, 2)
    return out


def random_interference_graph(g: Graph, density: float, seed: int = 0) -> np.ndarray:
    """Sample the 0/1 tensor a[i, j, m] over admissible triples.

    A triple (i, j, m) is admissible when (i, j) is a graph edge; each
    admissible triple is set independently with probability ``density``.
    """
    if not (0.0 <= density <= 1.0):
        raise ValueError("density must be in [0, 1]")
    n = g.n_agents
    rng = np.random.default_rng(seed)
    a = np.zeros((n, n, n), dtype=np.int8)
    for i in range(n):
        for j in g.neighbors(i):
            for m in range(n):
                if rng.random() < density:
                    a[i, j, m] = 1
    return a


@dataclass(frozen=True)
class InterferenceModel:
    """Frozen interference channel for one scenario.

    variant: one of 'uniform', 'general', 'outgoing', 'incoming'.
    gains:   uniform  -> [Gamma_1]
             outgoing -> one Gamma_m per transmitting agent m
             incoming -> one Gamma_i per receiving agent i
             general  -> a pool assigned per interferer (Gamma for (i,j,m) is
                         gains[m % len(gains)])
    """

    variant: str
    n: int
    a: np.ndarray  # (N, N, N) tensor a[i, j, m]
    gains: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant: {self.variant!r}")
        if not self.gains:
            raise ValueError("at least one gain matrix is required")
        for gm in self.gains:
            if gm.shape != (self.n, self.n):
                raise ValueError("every gain must be n x n")
            if not np.all(np.isfinite(gm)):
                raise ValueError("gain entries must be finite")
        N = self.a.shape[0]
        if self.a.shape != (N, N, N):
            raise ValueError("interference tensor must be N x N x N")
        if self.variant in ("outgoing", "incoming") and len(self.gains) != N:
            raise ValueError(f"{self.variant} variant needs one gain per agent")

    @property
    def n_agents(self) -> int:
        return self.a.shape[0]

    def gain(self, i: int, j: int, m: int) -> np.ndarray:
        """Gamma_ij^m for the given receiver i, link source j, interferer m."""
        if self.variant == "uniform":
            return self.gains[0]
        if self.variant == "outgoing":
            return self.gains[m]
        if self.variant == "incoming":
            return self.gains[i]
        return self.gains[m % len(self.gains)]

    def link_interference(self, i: int, j: int, transmissions: np.ndarray) -> np.ndarray:
        """z^ij = sum_m a[i,j,m] Gamma_ij^m t^m for transmitted vectors t."""
        z = np.zeros(self.n)
        for m in np.flatnonzero(self.a[i, j]):
            z += self.gain(i, j, int(m)) @ transmissions[m]
        return z

    def scaled(self, alpha: float) -> "InterferenceModel":
        return InterferenceModel(
            variant=self.variant,
            n=self.n,
            a=self.a,
            gains=tuple(alpha * g for g in self.gains),
        )


def received_message(
    model: InterferenceModel,
    i: int,
    j: int,
    transmissions: np.ndarray,
) -> np.ndarray:
    """What agent i receives on the j -> i link: x^j plus additive interference."""
    transmissions = np.asarray(transmissions, dtype=float)
    if transmissions.shape[0] != model.n_agents:
        raise ValueError("transmissions must cover all agents")
    return transmissions[j] + model.link_interference(i, j, transmissions)


def effective_gain_uniform(wm: WeightMatrix, a: np.ndarray) -> np.ndarray:
    """B_1 with entries b_i^m = sum_{j in N_i} w_ij a[i,j,m] (uniform case)."""
    w = as_matrix(wm.w)
    N = w.shape[0]
    b = np.zeros((N, N))
    for i in range(N):
        for j in wm.graph.neighbors(i):
            b[i] += w[i, j] * a[i, j]
    return b
