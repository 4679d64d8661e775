"""FastAPI service wrapping the simulator.

Endpoints:
    GET  /health               liveness + version
    GET  /demos                bundled demo scenario names
    GET  /demos/{name}         a bundled scenario document
    POST /validate             validate a scenario, echoing resolved defaults
    POST /run                  run one scenario, returning report + trajectory
    POST /batch                run several scenarios, failures recorded per item
"""

from __future__ import annotations

import importlib.resources
import json

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .scenario import ScenarioError, parse_scenario
from .service import run_scenario

app = FastAPI(title="aligned-consensus", version=__version__)

DEMO_NAMES = ("example1", "fig2", "fig3", "fig4")


def load_demo(name: str) -> dict:
    if name not in DEMO_NAMES:
        raise KeyError(name)
    ref = importlib.resources.files("aligned_consensus") / "demos" / f"{name}.json"
    return json.loads(ref.read_text())


class HealthResponse(BaseModel):
    status: str
    version: str


class ValidateRequest(BaseModel):
    scenario: dict


class ValidateResponse(BaseModel):
    valid: bool
    errors: list[str] = Field(default_factory=list)
    resolved: dict | None = None


class RunRequest(BaseModel):
    scenario: dict


class RunResponse(BaseModel):
    report: dict
    trajectory: list[dict]
    plot_data: dict


class BatchRequest(BaseModel):
    scenarios: list[dict]
    parallelism: int = Field(default=1, ge=1)


class BatchItem(BaseModel):
    ok: bool
    error: str | None = None
    result: RunResponse | None = None


class BatchResponse(BaseModel):
    results: list[BatchItem]


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.get("/demos")
def list_demos() -> dict:
    return {"demos": list(DEMO_NAMES)}


@app.get("/demos/{name}")
def get_demo(name: str) -> dict:
    try:
        return load_demo(name)
    except KeyError:
        raise HTTPException(status_code=404, detail=f"unknown demo: {name!r}")


@app.post("/validate", response_model=ValidateResponse)
def validate(req: ValidateRequest) -> ValidateResponse:
    try:
        sc = parse_scenario(req.scenario)
    except ScenarioError as exc:
        return ValidateResponse(valid=False, errors=[str(exc)])
    return ValidateResponse(valid=True, resolved=sc.model_dump())


@app.post("/run", response_model=RunResponse)
def run(req: RunRequest) -> RunResponse:
    try:
        sc = parse_scenario(req.scenario)
    except ScenarioError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    out = run_scenario(sc)
    return RunResponse(
        report=out.report, trajectory=out.trajectory_rows, plot_data=out.plot_data
    )


def _run_item(raw: dict) -> BatchItem:
    try:
        sc = parse_scenario(raw)
        out = run_scenario(sc)
    except Exception as exc:
        return BatchItem(ok=False, error=str(exc))
    return BatchItem(
        ok=True,
        result=RunResponse(
            report=out.report, trajectory=out.trajectory_rows, plot_data=out.plot_data
        ),
    )


@app.post("/batch", response_model=BatchResponse)
def batch(req: BatchRequest) -> BatchResponse:
    if req.parallelism <= 1:
        items = [_run_item(raw) for raw in req.scenarios]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=req.parallelism) as pool:
            items = list(pool.map(_run_item, req.scenarios))
    return BatchResponse(results=items)
