"""Undirected communication graphs and doubly stochastic consensus weights."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import svd


@dataclass(frozen=True)
class Graph:
    """Undirected graph on agents 0..n_agents-1, no self-loops."""

    n_agents: int
    edges: frozenset[tuple[int, int]]  # each stored as (min, max)

    def __post_init__(self):
        # single-agent graphs are degenerate but valid (no edges)
        if self.n_agents < 1:
            raise ValueError("a graph needs at least one agent")
        for i, j in self.edges:
            if i == j:
                raise ValueError("self-loops are not allowed")
            if not (0 <= i < self.n_agents and 0 <= j < self.n_agents):
                raise ValueError(f"edge ({i},{j}) out of range")
            if i > j:
                raise ValueError("edges must be stored as (min, max) pairs")

    def neighbors(self, i: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for u in self.neighbors(v):
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == self.n_agents


def _edge(i: int, j: int) -> tuple[int, int]:
    return (min(i, j), max(i, j))


def build_graph(
    kind: str,
    n: int,
    seed: int = 0,
    edge_prob: float = 0.3,
) -> Graph:
    """Build a connected graph: 'ring', 'complete', or 'random_connected'.

    Random graphs are Erdos-Renyi draws augmented with a spanning chain so
    that connectivity is guaranteed deterministically per seed.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if kind == "ring":
        edges = {_edge(i, (i + 1) % n) for i in range(n)}
    elif kind == "complete":
        edges = {_edge(i, j) for i in range(n) for j in range(i + 1, n)}
    elif kind == "random_connected":
        if not (0 < edge_prob <= 1):
            raise ValueError("edge_prob must be in (0, 1]")
        rng = np.random.default_rng(seed)
        edges = set()
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < edge_prob:
                    edges.add((i, j))
        g = Graph(n_agents=n, edges=frozenset(edges))
        if not g.is_connected():
            # spanning chain over a seeded permutation keeps the draw random
            # while forcing connectivity
            perm = rng.permutation(n)
            for a, b in zip(perm[:-1], perm[1:]):
                edges.add(_edge(int(a), int(b)))
    else:
        raise ValueError(f"unknown graph kind: {kind!r}")
    return Graph(n_agents=n, edges=frozenset(edges))


@dataclass(frozen=True)
class WeightMatrix:
    """Doubly stochastic scalar weights respecting the graph sparsity."""

    w: np.ndarray
    graph: Graph = field(compare=False)


def metropolis_weights(g: Graph) -> WeightMatrix:
    """Metropolis-Hastings weights: w_ij = 1/(1 + max(deg_i, deg_j)) on edges."""
    if not g.is_connected():
        raise ValueError("graph must be connected")
    n = g.n_agents
    w = np.zeros((n, n))
    for i, j in g.edges:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(g.degree(i), g.degree(j)))
    for i in range(n):
        w[i, i] = 1.0 - w[i].sum()
    return WeightMatrix(w=w, graph=g)


def contraction_factor(w: np.ndarray) -> float:
    """Largest singular value of W - (1/N) 1 1^T."""
    n = w.shape[0]
    dev = w - np.full((n, n), 1.0 / n)
    s = svd(dev).s
    return float(s[0]) if s.size else 0.0


def verify_consensus_conditions(wm: WeightMatrix, tol: float = 1e-12) -> dict:
    """Check the convergence conditions for the scalar consensus protocol."""
    w = wm.w
    g = wm.graph
    n = g.n_agents
    ones = np.ones(n)
    row = bool(np.max(np.abs(w @ ones - ones)) <= tol * n)
    col = bool(np.max(np.abs(ones @ w - ones)) <= tol * n)
    sparsity = True
    for i in range(n):
        for j in range(n):
            if i != j and abs(w[i, j]) > tol and not g.has_edge(i, j):
                sparsity = False
    factor = contraction_factor(w)
    return {
        "row_stochastic": row,
        "column_stochastic": col,
        "sparsity_respects_edges": sparsity,
        "contracts_on_disagreement": bool(factor < 1.0),
        "contraction_factor": factor,
    }


def graph_to_text(g: Graph) -> str:
    """Edge-list format: first line N, then one 'i j' pair per line."""
    lines = [str(g.n_agents)]
    lines.extend(f"{i} {j}" for i, j in sorted(g.edges))
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> Graph:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty graph file")
    n = int(lines[0])
    edges = set()
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"malformed edge line: {ln!r}")
        i, j = int(parts[0]), int(parts[1])
        edges.add(_edge(i, j))
    return Graph(n_agents=n, edges=frozenset(edges))
