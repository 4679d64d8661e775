"""Scenario configuration: pydantic models, JSON loading, and construction of
the concrete run artifacts (graph, weights, interference model, signal
subspace, initial conditions).

Unknown keys are rejected; every default the loader fills is echoed back in
the run report for reproducibility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .alignment import SignalSubspace, make_signal_subspace
from .engine import RunControls, RunSetup
from .interference import (
    InterferenceModel,
    random_interference_graph,
    random_low_rank,
)
from .numerics import as_matrix, null_space
from .topology import Graph, WeightMatrix, build_graph, metropolis_weights


class ScenarioError(Exception):
    """Raised when a scenario file cannot be parsed or validated."""


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GraphSpec(_StrictModel):
    kind: Literal["ring", "complete", "random_connected"] = "ring"
    n_agents: int = Field(ge=2)
    seed: int = 0
    edge_prob: float = Field(default=0.3, gt=0.0, le=1.0)


class InterferenceSpec(_StrictModel):
    variant: Literal["uniform", "general", "outgoing", "incoming"]
    rank: int = Field(default=1, ge=1)
    density: float = Field(default=1.0, ge=0.0, le=1.0)
    scale: float = 1.0
    seed: int = 0
    symmetric: bool = False
    # explicit gains override random generation
    matrix: list[list[float]] | None = None       # uniform variant
    matrices: list[list[list[float]]] | None = None  # general / per-agent
    num_gains: int = Field(default=3, ge=1)       # general random pool size


class SignalSpec(_StrictModel):
    dim: int = Field(ge=0)
    mode: Literal["arbitrary", "principal", "selective"] = "arbitrary"
    seed: int = 0
    matrix: list[list[float]] | None = None
    indices: list[int] | None = None


class InitSpec(_StrictModel):
    kind: Literal["random", "in_subspace", "in_nullspace", "explicit"] = "random"
    seed: int = 0
    scale: float = 1.0
    values: list[list[float]] | None = None


class RunSpec(_StrictModel):
    eps: float = Field(default=1e-9, gt=0.0)
    window: int = Field(default=5, ge=1)
    max_iters: int = Field(default=10_000, ge=1)
    stride: int = Field(default=1, ge=1)
    divergence_ceiling: float = Field(default=1e9, gt=0.0)


class AlignmentSpec(_StrictModel):
    completion_seed: int = 0
    randomize_nullspace_basis: bool = False


class ToleranceSpec(_StrictModel):
    # None means the standard numerical-rank default max(m, n) * eps
    rank_tol: float | None = None
    operator_tol: float = 1e-9


class Scenario(_StrictModel):
    name: str = "scenario"
    protocol: Literal[
        "naive", "uniform_aligned", "conservative", "outgoing", "incoming"
    ]
    n: int = Field(ge=1)
    graph: GraphSpec
    weights: Literal["metropolis"] = "metropolis"
    interference: InterferenceSpec
    signal: SignalSpec
    init: InitSpec = Field(default_factory=InitSpec)
    run: RunSpec = Field(default_factory=RunSpec)
    alignment: AlignmentSpec = Field(default_factory=AlignmentSpec)
    tolerances: ToleranceSpec = Field(default_factory=ToleranceSpec)
    expect_divergence: bool = False

    @model_validator(mode="after")
    def _check_consistency(self) -> "Scenario":
        n = self.n
        if self.signal.dim > n:
            raise ValueError(f"signal.dim={self.signal.dim} exceeds n={n}")
        if self.signal.mode in ("principal", "selective") and self.signal.matrix is None:
            raise ValueError(f"signal mode {self.signal.mode!r} requires signal.matrix")
        if self.signal.matrix is not None:
            _check_square(self.signal.matrix, n, "signal.matrix")
        if self.signal.mode == "selective":
            if self.signal.indices is None or len(self.signal.indices) != self.signal.dim:
                raise ValueError("selective mode needs exactly signal.dim indices")
        if self.interference.matrix is not None:
            _check_square(self.interference.matrix, n, "interference.matrix")
        if self.interference.matrices is not None:
            for idx, m in enumerate(self.interference.matrices):
                _check_square(m, n, f"interference.matrices[{idx}]")
        variant = self.interference.variant
        required = {
            "uniform_aligned": "uniform",
            "conservative": "general",
            "outgoing": "outgoing",
            "incoming": "incoming",
        }
        if self.protocol in required and variant != required[self.protocol]:
            raise ValueError(
                f"protocol {self.protocol!r} requires interference variant "
                f"{required[self.protocol]!r}, got {variant!r}"
            )
        if self.interference.rank > n:
            raise ValueError("interference.rank exceeds n")
        if self.init.kind == "explicit":
            if self.init.values is None:
                raise ValueError("explicit init requires init.values")
            if len(self.init.values) != self.graph.n_agents:
                raise ValueError("init.values must have one vector per agent")
            for v in self.init.values:
                if len(v) != n:
                    raise ValueError("every init vector must have length n")
        return self


def _check_square(rows: list[list[float]], n: int, what: str) -> None:
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"{what} must be {n}x{n}")


def parse_scenario(data: dict) -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(str(exc)) from exc


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a JSON scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: scenario file must hold a JSON object")
    return parse_scenario(data)


@dataclass
class Artifacts:
    """Concrete objects built from a Scenario."""

    scenario: Scenario
    graph: Graph
    wm: WeightMatrix
    model: InterferenceModel
    signal: SignalSubspace
    x0: np.ndarray
    setup: RunSetup


def _build_gains(sc: Scenario, graph: Graph) -> tuple[np.ndarray, ...]:
    spec = sc.interference
    n = sc.n
    if spec.variant == "uniform":
        if spec.matrix is not None:
            gains = (as_matrix(spec.matrix),)
        else:
            gains = (random_low_rank(n, spec.rank, spec.seed, spec.symmetric, unit_norm=True),)
    elif spec.variant in ("outgoing", "incoming"):
        if spec.matrices is not None:
            if len(spec.matrices) != graph.n_agents:
                raise ScenarioError(
                    f"{spec.variant} variant needs one matrix per agent"
                )
            gains = tuple(as_matrix(m) for m in spec.matrices)
        else:
            gains = tuple(
                random_low_rank(
                    n, spec.rank, spec.seed + 1000 * i, spec.symmetric, unit_norm=True
                )
                for i in range(graph.n_agents)
            )
    else:  # general
        if spec.matrices is not None:
            gains = tuple(as_matrix(m) for m in spec.matrices)
        else:
            gains = tuple(
                random_low_rank(
                    n, spec.rank, spec.seed + 1000 * i, spec.symmetric, unit_norm=True
                )
                for i in range(spec.num_gains)
            )
    return tuple(spec.scale * g for g in gains)


def _signal_builder(sc: Scenario):
    def build(dim: int) -> SignalSubspace:
        return make_signal_subspace(
            n=sc.n,
            dim=dim,
            mode=sc.signal.mode,
            seed=sc.signal.seed,
            a=np.asarray(sc.signal.matrix, dtype=float)
            if sc.signal.matrix is not None
            else None,
            indices=sc.signal.indices,
        )

    return build


def _build_x0(sc: Scenario, signal: SignalSubspace, model: InterferenceModel) -> np.ndarray:
    N = sc.graph.n_agents
    n = sc.n
    spec = sc.init
    if spec.kind == "explicit":
        return np.asarray(spec.values, dtype=float)
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "random":
        return spec.scale * rng.standard_normal((N, n))
    if spec.kind == "in_subspace":
        basis = signal.basis()
        coeff = rng.standard_normal((N, signal.dim))
        return spec.scale * coeff @ basis.T
    # in_nullspace: initial conditions inside the (first) gain's null space
    theta = null_space(model.gains[0], sc.tolerances.rank_tol)
    if theta.dim == 0:
        return np.zeros((N, n))
    coeff = rng.standard_normal((N, theta.dim))
    return spec.scale * coeff @ theta.basis.T


def build_artifacts(sc: Scenario) -> Artifacts:
    """Instantiate everything a runner needs from a validated scenario."""
    graph = build_graph(
        sc.graph.kind, sc.graph.n_agents, sc.graph.seed, sc.graph.edge_prob
    )
    wm = metropolis_weights(graph)
    a = random_interference_graph(graph, sc.interference.density, sc.interference.seed)
    gains = _build_gains(sc, graph)
    model = InterferenceModel(
        variant=sc.interference.variant, n=sc.n, a=a, gains=gains
    )
    builder = _signal_builder(sc)
    signal = builder(sc.signal.dim)
    x0 = _build_x0(sc, signal, model)
    setup = RunSetup(
        wm=wm,
        model=model,
        signal=signal,
        x0=x0,
        controls=RunControls(
            eps=sc.run.eps,
            window=sc.run.window,
            max_iters=sc.run.max_iters,
            stride=sc.run.stride,
            divergence_ceiling=sc.run.divergence_ceiling,
        ),
        completion_seed=sc.alignment.completion_seed,
        randomize_nullspace_basis=sc.alignment.randomize_nullspace_basis,
        rank_tol=sc.tolerances.rank_tol,
        signal_builder=builder,
    )
    return Artifacts(
        scenario=sc, graph=graph, wm=wm, model=model, signal=signal, x0=x0, setup=setup
    )
