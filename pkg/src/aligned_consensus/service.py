"""Run orchestration: dispatch a validated scenario to its runner and package
the results (report, trajectory rows, plot-ready point sets) as plain data.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .engine import RUNNERS, RunResult, Trajectory
from .scenario import Artifacts, Scenario, build_artifacts


@dataclass
class RunOutput:
    report: dict
    trajectory_rows: list[dict]
    plot_data: dict


def _vec(x: np.ndarray) -> list[float]:
    return [float(v) for v in np.asarray(x).ravel()]


def _vectors(x: np.ndarray) -> list[list[float]]:
    return [_vec(row) for row in np.asarray(x)]


def _trajectory_rows(traj: Trajectory) -> list[dict]:
    by_k = {
        k: (d, l)
        for k, d, l in zip(traj.ks, traj.disagreement, traj.leakage)
    }
    rows = []
    for k, state in traj.states:
        dis, leak = by_k[k]
        for agent, x in enumerate(state):
            rows.append(
                {
                    "k": k,
                    "agent": agent,
                    "x": _vec(x),
                    "disagreement": dis,
                    "leakage": leak,
                }
            )
    return rows


def _plot_data(art: Artifacts, traj: Trajectory, result: RunResult) -> dict:
    """Point sets mirroring the project / align / iterate / recover pipeline."""
    signal = art.signal
    projected = art.x0 @ signal.projector.T
    return {
        "initial": _vectors(art.x0),
        "projected": _vectors(projected),
        "aligned": _vectors(traj.states[0][1]),
        "iterates": [
            {"k": k, "points": _vectors(state)} for k, state in traj.states
        ],
        "recovered": _vectors(result.recovered),
        "oracle": _vec(result.oracle),
        "true_average": _vec(result.true_average),
    }


def run_scenario(sc: Scenario) -> RunOutput:
    """Build artifacts, run the scenario's protocol, and package the results."""
    art = build_artifacts(sc)
    runner = RUNNERS[sc.protocol]
    traj, result = runner(art.setup)
    report = {
        "scenario": sc.model_dump(),
        "protocol": sc.protocol,
        "outcome": traj.outcome.kind,
        "k_star": traj.outcome.k,
        "final_disagreement": traj.disagreement[-1],
        "max_leakage": traj.max_leakage,
        "max_alignment_residual": max(traj.alignment_residual),
        "max_shadow_residual": max(traj.shadow_residual)
        if traj.shadow_residual
        else None,
        "oracle_distance": result.oracle_distance,
        "orthogonality_residual": result.orthogonality_residual,
        "oracle": _vec(result.oracle),
        "true_average": _vec(result.true_average),
        "recovered": _vectors(result.recovered),
        "operator_audit": result.operator_audit,
        "spectral_radius": result.spectral_radius,
        "n_iterations": traj.ks[-1],
    }
    return RunOutput(
        report=report,
        trajectory_rows=_trajectory_rows(traj),
        plot_data=_plot_data(art, traj, result),
    )


def run_batch(scenarios: list[Scenario], parallelism: int = 1) -> list[RunOutput]:
    """Run independent scenarios, optionally in parallel; output order follows
    the input order regardless of scheduling."""
    if parallelism <= 1:
        return [run_scenario(sc) for sc in scenarios]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(run_scenario, scenarios))
