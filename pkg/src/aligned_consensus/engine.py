"""Protocol runners: naive, uniform-aligned, conservative, outgoing, incoming.

Every aligned runner applies the live interference channel at each step, so
annihilation is demonstrated numerically rather than assumed. Runners return a
Trajectory (per-iteration metrics plus strided states) and a RunResult holding
the recovered per-agent vectors and the projected-average oracle comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .alignment import (
    PostConditioner,
    Preconditioner,
    SignalSubspace,
    build_blanket,
    build_postconditioner,
    build_preconditioner,
    matrix_weight_incoming,
)
from .interference import InterferenceModel, effective_gain_uniform
from .numerics import kron, null_space
from .topology import WeightMatrix


@dataclass(frozen=True)
class Outcome:
    kind: str  # 'converged' | 'diverged' | 'max_iters'
    k: int

    @property
    def converged(self) -> bool:
        return self.kind == "converged"


@dataclass
class RunControls:
    eps: float = 1e-9
    window: int = 5
    max_iters: int = 10_000
    stride: int = 1
    divergence_ceiling: float = 1e9


@dataclass
class Trajectory:
    """Per-iteration metrics and strided network states."""

    states: list[tuple[int, np.ndarray]] = field(default_factory=list)
    ks: list[int] = field(default_factory=list)
    disagreement: list[float] = field(default_factory=list)
    leakage: list[float] = field(default_factory=list)
    norm: list[float] = field(default_factory=list)
    alignment_residual: list[float] = field(default_factory=list)
    shadow_residual: list[float] = field(default_factory=list)
    initial_norm: float = 0.0
    ceiling: float = np.inf
    outcome: Outcome = field(default_factory=lambda: Outcome("max_iters", 0))

    @property
    def max_leakage(self) -> float:
        return max(self.leakage) if self.leakage else 0.0


@dataclass
class RunResult:
    final: np.ndarray              # per-agent working states at the last step
    recovered: np.ndarray          # per-agent vectors after the inverse transform
    oracle: np.ndarray             # I_S applied to the true average
    true_average: np.ndarray
    error: np.ndarray              # recovered - oracle, per agent
    oracle_distance: float         # max_i ||recovered_i - oracle||
    orthogonality_residual: float
    operator_audit: dict = field(default_factory=dict)
    spectral_radius: float | None = None


def oracle_projected_average(x0: np.ndarray, s: SignalSubspace) -> np.ndarray:
    """Exact I_S * mean(x0) over agents."""
    x0 = np.asarray(x0, dtype=float)
    return s.projector @ x0.mean(axis=0)


def error_orthogonality(result: RunResult) -> float:
    """|oracle^T (true_average - oracle)|: the steady-state error is
    orthogonal to the estimate."""
    return float(abs(result.oracle @ (result.true_average - result.oracle)))


@dataclass
class RunSetup:
    """Everything a runner needs, independent of file formats."""

    wm: WeightMatrix
    model: InterferenceModel | None
    signal: SignalSubspace
    x0: np.ndarray  # (N, n)
    controls: RunControls = field(default_factory=RunControls)
    completion_seed: int = 0
    randomize_nullspace_basis: bool = False
    rank_tol: float | None = None
    # conservative protocol rebuilds the signal subspace at the blanket's
    # null-space dimension
    signal_builder: Callable[[int], SignalSubspace] | None = None


def _disagreement(x: np.ndarray) -> float:
    mean = x.mean(axis=0)
    return float(np.max(np.linalg.norm(x - mean, axis=1)))


def _run_loop(
    x0: np.ndarray,
    step: Callable[[np.ndarray], tuple[np.ndarray, float, float]],
    controls: RunControls,
    shadow: Callable[[int, np.ndarray], float] | None = None,
) -> Trajectory:
    """Iterate ``step`` (returning next state, leakage, alignment residual)
    with convergence/divergence detection and metric recording."""
    traj = Trajectory()
    x = np.array(x0, dtype=float)
    traj.initial_norm = float(np.max(np.linalg.norm(x, axis=1))) if x.size else 0.0
    traj.ceiling = controls.divergence_ceiling * max(traj.initial_norm, 1.0)
    traj.states.append((0, x.copy()))
    traj.ks.append(0)
    traj.disagreement.append(_disagreement(x))
    traj.leakage.append(0.0)
    traj.norm.append(traj.initial_norm)
    traj.alignment_residual.append(0.0)
    if shadow is not None:
        traj.shadow_residual.append(0.0)
    consecutive = 0
    for k in range(1, controls.max_iters + 1):
        x, leak, resid = step(x)
        norm = float(np.max(np.linalg.norm(x, axis=1))) if x.size else 0.0
        dis = _disagreement(x)
        traj.ks.append(k)
        traj.disagreement.append(dis)
        traj.leakage.append(leak)
        traj.norm.append(norm)
        traj.alignment_residual.append(resid)
        if shadow is not None:
            traj.shadow_residual.append(shadow(k, x))
        if k % controls.stride == 0:
            traj.states.append((k, x.copy()))
        if not np.all(np.isfinite(x)) or norm > traj.ceiling:
            traj.outcome = Outcome("diverged", k)
            break
        if dis < controls.eps:
            consecutive += 1
            if consecutive >= controls.window:
                traj.outcome = Outcome("converged", k)
                break
        else:
            consecutive = 0
    else:
        traj.outcome = Outcome("max_iters", controls.max_iters)
    if traj.states[-1][0] != traj.ks[-1]:
        traj.states.append((traj.ks[-1], x.copy()))
    return traj


def detect_convergence(traj: Trajectory, eps: float, window: int) -> Outcome:
    """Re-derive the outcome from recorded metrics (post-update iterations)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    consecutive = 0
    for k, dis, norm in zip(traj.ks, traj.disagreement, traj.norm):
        if k == 0:
            continue
        if not np.isfinite(norm) or norm > traj.ceiling:
            return Outcome("diverged", k)
        if dis < eps:
            consecutive += 1
            if consecutive >= window:
                return Outcome("converged", k)
        else:
            consecutive = 0
    return Outcome("max_iters", traj.ks[-1] if traj.ks else 0)


def _scalar_consensus_step(
    wm: WeightMatrix,
    model: InterferenceModel | None,
    residual_gains: tuple[np.ndarray, ...] = (),
):
    """Scalar-weight consensus update with the live interference channel.

    Used by the naive, uniform-aligned, and conservative runners (which
    differ only in initial conditions and recovery transform).
    """
    w = wm.w
    g = wm.graph
    N = g.n_agents
    neighbor_lists = [g.neighbors(i) for i in range(N)]

    def step(x: np.ndarray) -> tuple[np.ndarray, float, float]:
        x_new = np.empty_like(x)
        leak = 0.0
        for i in range(N):
            acc = w[i, i] * x[i]
            for j in neighbor_lists[i]:
                msg = x[j]
                if model is not None:
                    z = model.link_interference(i, j, x)
                    leak = max(leak, float(np.linalg.norm(z)))
                    msg = msg + z
                acc = acc + w[i, j] * msg
            x_new[i] = acc
        resid = 0.0
        for gm in residual_gains:
            resid = max(resid, float(np.max(np.linalg.norm(x_new @ gm.T, axis=1))))
        return x_new, leak, resid

    return step


def stacked_uniform_operator(wm: WeightMatrix, model: InterferenceModel) -> np.ndarray:
    """W (x) I_n + B_1 (x) Gamma_1 for a uniform interference model."""
    if model.variant != "uniform":
        raise ValueError("stacked operator is defined for the uniform variant")
    n = model.n
    b1 = effective_gain_uniform(wm, model.a)
    return kron(wm.w, np.eye(n)) + kron(b1, model.gains[0])


def run_naive(setup: RunSetup) -> tuple[Trajectory, RunResult]:
    """Standard scalar-weight protocol with the raw interference channel."""
    residual = setup.model.gains if setup.model is not None else ()
    step = _scalar_consensus_step(setup.wm, setup.model, residual)
    traj = _run_loop(setup.x0, step, setup.controls)
    final = traj.states[-1][1]
    rho = None
    if setup.model is not None and setup.model.variant == "uniform":
        op = stacked_uniform_operator(setup.wm, setup.model)
        rho = float(np.max(np.abs(np.linalg.eigvals(op))))
    result = _make_result(final, final, setup.x0, setup.signal)
    result.spectral_radius = rho
    return traj, result


def run_uniform_aligned(setup: RunSetup) -> tuple[Trajectory, RunResult]:
    """Project onto S, precondition into the interference null space, run the
    scalar protocol through the live channel, and recover via T^{-1}."""
    model = setup.model
    if model is None or model.variant != "uniform":
        raise ValueError("uniform-aligned runner needs a uniform interference model")
    gamma = model.gains[0]
    theta = null_space(gamma, setup.rank_tol)
    pre = build_preconditioner(
        theta,
        setup.signal,
        completion_seed=setup.completion_seed,
        randomize_basis=setup.randomize_nullspace_basis,
    )
    return _run_preconditioned(setup, model, pre, setup.signal)


def run_conservative(setup: RunSetup) -> tuple[Trajectory, RunResult]:
    """Blanket the local interference ranges and run the aligned pipeline in
    the blanket's null space (possibly zero-dimensional)."""
    model = setup.model
    if model is None or model.variant != "general":
        raise ValueError("conservative runner needs a general interference model")
    _, blanket_null = build_blanket(list(model.gains))
    gamma_low = blanket_null.dim
    if setup.signal_builder is not None:
        signal = setup.signal_builder(gamma_low)
    elif setup.signal.dim == gamma_low:
        signal = setup.signal
    else:
        raise ValueError(
            f"signal subspace dimension {setup.signal.dim} does not match the "
            f"blanket null-space dimension {gamma_low}"
        )
    pre = build_preconditioner(
        blanket_null,
        signal,
        completion_seed=setup.completion_seed,
        randomize_basis=setup.randomize_nullspace_basis,
    )
    return _run_preconditioned(setup, model, pre, signal)


def _run_preconditioned(
    setup: RunSetup,
    model: InterferenceModel,
    pre: Preconditioner,
    signal: SignalSubspace,
) -> tuple[Trajectory, RunResult]:
    x_hat0 = setup.x0 @ (pre.t @ signal.projector).T
    step = _scalar_consensus_step(setup.wm, model, model.gains)
    traj = _run_loop(x_hat0, step, setup.controls)
    final = traj.states[-1][1]
    recovered = final @ pre.t_inv.T
    result = _make_result(final, recovered, setup.x0, signal)
    result.operator_audit = {"preconditioner_cond": [pre.condition_number]}
    return traj, result


def run_outgoing(setup: RunSetup) -> tuple[Trajectory, RunResult]:
    """Per-transmitter preconditioning with matrix weights w_ij T_j^{-1}."""
    model = setup.model
    if model is None or model.variant != "outgoing":
        raise ValueError("outgoing runner needs an outgoing interference model")
    N = model.n_agents
    pres: list[Preconditioner] = []
    for i in range(N):
        theta = null_space(model.gains[i], setup.rank_tol)
        pres.append(
            build_preconditioner(
                theta,
                setup.signal,
                completion_seed=setup.completion_seed + i,
                randomize_basis=setup.randomize_nullspace_basis,
            )
        )
    w = setup.wm.w
    g = setup.wm.graph
    neighbor_lists = [g.neighbors(i) for i in range(N)]
    proj = setup.signal.projector
    off_proj = np.eye(model.n) - proj

    def step(x: np.ndarray) -> tuple[np.ndarray, float, float]:
        trans = np.stack([pres[m].t @ x[m] for m in range(N)])
        x_new = np.empty_like(x)
        leak = 0.0
        for i in range(N):
            acc = w[i, i] * x[i]  # self term: W_ii T_i = w_ii I
            for j in neighbor_lists[i]:
                z = model.link_interference(i, j, trans)
                leak = max(leak, float(np.linalg.norm(z)))
                acc = acc + w[i, j] * (pres[j].t_inv @ (trans[j] + z))
            x_new[i] = acc
        resid = float(np.max(np.linalg.norm(x_new @ off_proj.T, axis=1)))
        return x_new, leak, resid

    x_tilde0 = setup.x0 @ proj.T
    traj = _run_loop(x_tilde0, step, setup.controls)
    final = traj.states[-1][1]
    result = _make_result(final, final, setup.x0, setup.signal)
    result.operator_audit = {
        "preconditioner_cond": [p.condition_number for p in pres]
    }
    return traj, result


def run_incoming(setup: RunSetup) -> tuple[Trajectory, RunResult]:
    """Per-receiver post-conditioning with masked transmissions.

    Tracks the shadow residual against an interference-free scalar reference
    run sharing the same weights and initial conditions.
    """
    model = setup.model
    if model is None or model.variant != "incoming":
        raise ValueError("incoming runner needs an incoming interference model")
    N = model.n_agents
    signal = setup.signal
    posts: list[PostConditioner] = []
    for i in range(N):
        theta_t = null_space(model.gains[i].T, setup.rank_tol)
        posts.append(
            build_postconditioner(
                theta_t,
                signal,
                completion_seed=setup.completion_seed + i,
                randomize_basis=setup.randomize_nullspace_basis,
            )
        )
    # W_ij R_i differs from W_ii R_i only by the scalar w_ij; precompute.
    combos = [matrix_weight_incoming(1.0, posts[i]) @ posts[i].r for i in range(N)]
    w = setup.wm.w
    g = setup.wm.graph
    neighbor_lists = [g.neighbors(i) for i in range(N)]
    mask = signal.mask
    shadow_map = signal.mask_matrix @ signal.vt

    # interference-free reference iterates for the shadow residual
    ref = {"x": np.array(setup.x0, dtype=float)}

    def step(x: np.ndarray) -> tuple[np.ndarray, float, float]:
        trans = x * mask  # S_S x_hat per agent
        x_new = np.empty_like(x)
        leak = 0.0
        for i in range(N):
            acc = w[i, i] * (combos[i] @ trans[i])  # self link, no interference
            for j in neighbor_lists[i]:
                zraw = model.gains[i] @ (model.a[i, j] @ trans)
                leak = max(
                    leak, float(np.linalg.norm(w[i, j] * (combos[i] @ zraw)))
                )
                acc = acc + w[i, j] * (combos[i] @ (trans[j] + zraw))
            x_new[i] = acc
        return x_new, leak, 0.0

    def shadow(_k: int, x: np.ndarray) -> float:
        ref["x"] = w @ ref["x"]
        expected = ref["x"] @ shadow_map.T
        return float(np.max(np.linalg.norm(x - expected, axis=1)))

    x_hat0 = setup.x0 @ signal.vt.T
    traj = _run_loop(x_hat0, step, setup.controls, shadow=shadow)
    final = traj.states[-1][1]
    recovered = final @ signal.u.T
    result = _make_result(final, recovered, setup.x0, signal)
    result.operator_audit = {
        "u_hat_cond": [p.condition_number for p in posts]
    }
    return traj, result


RUNNERS = {
    "naive": run_naive,
    "uniform_aligned": run_uniform_aligned,
    "conservative": run_conservative,
    "outgoing": run_outgoing,
    "incoming": run_incoming,
}


def _make_result(
    final: np.ndarray,
    recovered: np.ndarray,
    x0: np.ndarray,
    signal: SignalSubspace,
) -> RunResult:
    true_avg = np.asarray(x0, dtype=float).mean(axis=0)
    oracle = signal.projector @ true_avg
    error = recovered - oracle
    result = RunResult(
        final=final,
        recovered=recovered,
        oracle=oracle,
        true_average=true_avg,
        error=error,
        oracle_distance=float(np.max(np.linalg.norm(error, axis=1))),
        orthogonality_residual=0.0,
    )
    result.orthogonality_residual = error_orthogonality(result)
    return result
